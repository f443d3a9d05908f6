//! Reference block matrices used as the regression anchor set.

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::model::{BlockMatrix, EvlcpInstance};

pub const NAMES: [&str; 4] = ["example-2.1", "example-4.1", "example-4.2", "example-4.3"];

fn m(rows: [[f64; 2]; 2]) -> Matrix {
    Matrix::from_rows(&rows).expect("2x2 literal")
}

fn a0() -> Matrix {
    m([[1.0, 1.0], [-1.0, 1.0]])
}

/// Three blocks, every row distinct: nine block-row pairs.
pub fn example_2_1() -> BlockMatrix {
    BlockMatrix::new(vec![a0(), m([[1.0, 0.0], [-2.0, 1.0]]), m([[2.0, 1.0], [0.0, 1.0]])]).expect("valid")
}

/// Three blocks sharing their second row.
pub fn example_4_1() -> BlockMatrix {
    BlockMatrix::new(vec![a0(), m([[2.0, 1.0], [-1.0, 1.0]]), m([[1.0, 3.0], [-1.0, 1.0]])]).expect("valid")
}

/// Same blocks as [`example_2_1`].
pub fn example_4_2() -> BlockMatrix {
    example_2_1()
}

pub fn example_4_3() -> BlockMatrix {
    BlockMatrix::new(vec![
        a0(),
        m([[1.0, 0.0], [-2.0, 1.0]]),
        m([[4.0, 1.0], [0.0, 1.0]]),
        m([[2.0, 0.0], [-3.0, 1.0]]),
    ])
    .expect("valid")
}

pub fn by_name(name: &str) -> Result<BlockMatrix> {
    match name {
        "example-2.1" => Ok(example_2_1()),
        "example-4.1" => Ok(example_4_1()),
        "example-4.2" => Ok(example_4_2()),
        "example-4.3" => Ok(example_4_3()),
        other => Err(Error::input(format!("unknown builtin '{other}' (expected one of {})", NAMES.join(", ")))),
    }
}

/// Built-in instances carry zero source vectors, so `x* = 0`.
pub fn instance(name: &str) -> Result<EvlcpInstance> {
    by_name(name).map(EvlcpInstance::homogeneous)
}
