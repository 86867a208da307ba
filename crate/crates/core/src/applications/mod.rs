//! Statistical uses of the commuting model: functional equations, merging
//! two POVMs into one commuting family, and state estimation.

pub mod estimate;
pub mod functional;
pub mod merge;
