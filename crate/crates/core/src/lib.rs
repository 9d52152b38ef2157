pub mod derham;
pub mod element;
pub mod mesh;
pub mod sparse;
pub mod linsolve;
pub mod fields;
pub mod relax;
pub mod hodge;
pub mod diagio;
pub mod cli;
