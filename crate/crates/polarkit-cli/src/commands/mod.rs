pub mod align;
pub mod decode;
pub mod diffuse;
pub mod metrics;
pub mod pipeline;
pub mod separate;
pub mod simulate;
