//! Generic scalar abstraction for the numeric core.
//!
//! Everything downstream of the lattice geometry is written against [`Real`]
//! so the whole stack can run in `f32` or `f64`; the crate root exports `f64`
//! aliases which the CLI and the acceptance suite use.

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};
use serde::{de::DeserializeOwned, Serialize};
use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + LowerExp
    + Serialize
    + DeserializeOwned
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from `f64`; constants in the algorithms are written
    /// as `f64` literals and lifted through this.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 converts to any Real")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().expect("Real converts to f64")
    }
}

impl Real for f32 {}
impl Real for f64 {}
