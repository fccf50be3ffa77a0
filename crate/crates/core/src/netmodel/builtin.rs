//! Cases shipped with the crate.

use crate::scalar::Scalar;

use super::{parse_case, CaseData, NetError};

pub const IEEE14_TEXT: &str = include_str!("../../cases/ieee14.case");
pub const TWOBUS_TEXT: &str = include_str!("../../cases/twobus.case");

pub fn ieee14<T: Scalar>() -> Result<CaseData<T>, NetError> {
    parse_case(IEEE14_TEXT)
}

pub fn twobus<T: Scalar>() -> Result<CaseData<T>, NetError> {
    parse_case(TWOBUS_TEXT)
}
