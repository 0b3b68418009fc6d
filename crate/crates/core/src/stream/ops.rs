//! Scalar operator semantics shared by the compiled evaluator and constant
//! folding. Integer arithmetic wraps; `/` always yields `Float`.

use super::ast::{BinOp, UnOp};
use super::value::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OpError;

pub fn unary(op: UnOp, v: Value) -> Result<Value, OpError> {
    match (op, v) {
        (UnOp::Neg, Value::Int(i)) => Ok(Value::Int(i.wrapping_neg())),
        (UnOp::Neg, Value::Float(x)) => Ok(Value::Float(-x)),
        (UnOp::Not, Value::Bool(b)) => Ok(Value::Bool(!b)),
        _ => Err(OpError),
    }
}

pub fn abs(v: Value) -> Result<Value, OpError> {
    match v {
        Value::Int(i) => Ok(Value::Int(i.wrapping_abs())),
        Value::Float(x) => Ok(Value::Float(x.abs())),
        Value::Bool(_) => Err(OpError),
    }
}

pub fn binary(op: BinOp, a: Value, b: Value) -> Result<Value, OpError> {
    use Value::*;
    match op {
        BinOp::And | BinOp::Or => match (a, b) {
            (Bool(x), Bool(y)) => Ok(Bool(if op == BinOp::And { x && y } else { x || y })),
            _ => Err(OpError),
        },
        BinOp::Eq | BinOp::Ne => {
            let eq = match (a, b) {
                (Bool(x), Bool(y)) => x == y,
                (Int(x), Int(y)) => x == y,
                _ => a.as_f64().ok_or(OpError)? == b.as_f64().ok_or(OpError)?,
            };
            Ok(Bool(if op == BinOp::Eq { eq } else { !eq }))
        }
        BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => {
            let ord = match (a, b) {
                (Int(x), Int(y)) => x.partial_cmp(&y),
                _ => a.as_f64().ok_or(OpError)?.partial_cmp(&b.as_f64().ok_or(OpError)?),
            };
            use std::cmp::Ordering::*;
            let r = match (op, ord) {
                (_, None) => false,
                (BinOp::Lt, Some(o)) => o == Less,
                (BinOp::Le, Some(o)) => o != Greater,
                (BinOp::Gt, Some(o)) => o == Greater,
                (BinOp::Ge, Some(o)) => o != Less,
                _ => unreachable!(),
            };
            Ok(Bool(r))
        }
        BinOp::Div => Ok(Float(a.as_f64().ok_or(OpError)? / b.as_f64().ok_or(OpError)?)),
        BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Min | BinOp::Max => match (a, b) {
            (Int(x), Int(y)) => Ok(Int(match op {
                BinOp::Add => x.wrapping_add(y),
                BinOp::Sub => x.wrapping_sub(y),
                BinOp::Mul => x.wrapping_mul(y),
                BinOp::Min => x.min(y),
                _ => x.max(y),
            })),
            _ => {
                let (x, y) = (a.as_f64().ok_or(OpError)?, b.as_f64().ok_or(OpError)?);
                Ok(Float(match op {
                    BinOp::Add => x + y,
                    BinOp::Sub => x - y,
                    BinOp::Mul => x * y,
                    BinOp::Min => x.min(y),
                    _ => x.max(y),
                }))
            }
        },
    }
}
