pub mod convert;
pub mod evaluate;
pub mod featurize;
pub mod train;
