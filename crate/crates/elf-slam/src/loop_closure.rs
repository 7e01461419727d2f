//! Placeholder.
pub struct EssMatrix<T>(pub Vec<T>);
