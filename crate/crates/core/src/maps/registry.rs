//! Named maps accepted on the command line.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use num_complex::Complex64;

use super::{Element, GradedSpace, Linearity, TameMapDescriptor};
use crate::fiber::FiberPoint;
use crate::sequence::TruncatedSequence;
use crate::{Error, Result};

/// Registry names; parameterized entries take `:<args>`.
pub const REGISTRY_NAMES: [&str; 9] =
    ["identity", "shift_up", "shift_down", "derivative", "scale", "coeff_square", "projection", "product", "compose"];

#[derive(Debug, Clone, PartialEq)]
pub enum MapSpec {
    Identity,
    /// `(Mf)_k = f_{k-1}`, `(Mf)_0 = 0`: multiplication by `z`.
    ShiftUp,
    /// `(Sf)_k = f_{k+1}`.
    ShiftDown,
    /// `(Df)_k = (k+1) f_{k+1}`.
    Derivative,
    Scale(f64),
    /// Coordinatewise square of every coefficient.
    CoeffSquare,
    /// 1-based factor index.
    Projection(usize),
    Product(Box<MapSpec>, Box<MapSpec>),
    /// `Compose(a, b)` is `a ∘ b`.
    Compose(Box<MapSpec>, Box<MapSpec>),
}

impl MapSpec {
    /// Parses `name` or `name:<args>`. Arguments of `product` and `compose`
    /// are split at the first comma, so only their second operand may be
    /// parameterized with commas of its own.
    pub fn parse(s: &str) -> Result<Self> {
        let (head, args) = match s.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (s, None),
        };
        let no_args = |spec: MapSpec| match args {
            None => Ok(spec),
            Some(_) => Err(Error::invalid(format!("map '{head}' takes no parameters"))),
        };
        let need = || args.ok_or_else(|| Error::invalid(format!("map '{head}' needs parameters")));
        match head {
            "identity" => no_args(MapSpec::Identity),
            "shift_up" => no_args(MapSpec::ShiftUp),
            "shift_down" => no_args(MapSpec::ShiftDown),
            "derivative" => no_args(MapSpec::Derivative),
            "coeff_square" => no_args(MapSpec::CoeffSquare),
            "scale" => {
                let c: f64 = need()?.parse().map_err(|_| Error::invalid(format!("bad scale factor in '{s}'")))?;
                if !c.is_finite() {
                    return Err(Error::invalid("scale factor must be finite"));
                }
                Ok(MapSpec::Scale(c))
            }
            "projection" => {
                let i: usize = need()?.parse().map_err(|_| Error::invalid(format!("bad factor index in '{s}'")))?;
                Ok(MapSpec::Projection(i))
            }
            "product" | "compose" => {
                let args = need()?;
                let (a, b) = split_operands(args).ok_or_else(|| Error::invalid(format!("'{s}' needs two operands")))?;
                let (a, b) = (Box::new(MapSpec::parse(a)?), Box::new(MapSpec::parse(b)?));
                Ok(if head == "product" { MapSpec::Product(a, b) } else { MapSpec::Compose(a, b) })
            }
            other => Err(Error::invalid(format!("unknown map '{other}'"))),
        }
    }
}

fn split_operands(args: &str) -> Option<(&str, &str)> {
    let (a, b) = args.split_once(',')?;
    (!a.is_empty() && !b.is_empty()).then_some((a, b))
}

impl fmt::Display for MapSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MapSpec::Identity => f.write_str("identity"),
            MapSpec::ShiftUp => f.write_str("shift_up"),
            MapSpec::ShiftDown => f.write_str("shift_down"),
            MapSpec::Derivative => f.write_str("derivative"),
            MapSpec::Scale(c) => write!(f, "scale:{c}"),
            MapSpec::CoeffSquare => f.write_str("coeff_square"),
            MapSpec::Projection(i) => write!(f, "projection:{i}"),
            MapSpec::Product(a, b) => write!(f, "product:{a},{b}"),
            MapSpec::Compose(a, b) => write!(f, "compose:{a},{b}"),
        }
    }
}

fn reindex(f: &TruncatedSequence, coeff: impl Fn(usize) -> Option<FiberPoint>) -> Result<TruncatedSequence> {
    let zero = f.fiber().zero();
    f.with_coefficients((0..=f.degree()).map(|k| coeff(k).unwrap_or_else(|| zero.clone())).collect())
}

fn per_factor(
    x: &Element,
    op: impl Fn(&TruncatedSequence) -> Result<TruncatedSequence>,
) -> Result<Element> {
    x.0.iter().map(op).collect::<Result<Vec<_>>>().map(Element)
}

fn shift_up(f: &TruncatedSequence) -> Result<TruncatedSequence> {
    let c = f.coefficients();
    reindex(f, |k| k.checked_sub(1).map(|j| c[j].clone()))
}

fn shift_down(f: &TruncatedSequence) -> Result<TruncatedSequence> {
    let c = f.coefficients();
    reindex(f, |k| c.get(k + 1).cloned())
}

fn derivative(f: &TruncatedSequence) -> Result<TruncatedSequence> {
    let c = f.coefficients();
    reindex(f, |k| c.get(k + 1).map(|p| p.scaled(Complex64::new((k + 1) as f64, 0.0))))
}

fn coeff_square(f: &TruncatedSequence) -> Result<TruncatedSequence> {
    f.with_coefficients(f.coefficients().iter().map(|p| FiberPoint(p.iter().map(|z| z * z).collect())).collect())
}

/// Builds the descriptor of `spec` over `space`. Projections act on
/// `space^max(2,i)`; every other entry maps `space` into a power of it.
pub fn build_map(spec: &MapSpec, space: &GradedSpace) -> Result<TameMapDescriptor> {
    let name = spec.to_string();
    let endo = |linearity, op: fn(&TruncatedSequence) -> Result<TruncatedSequence>| {
        TameMapDescriptor::new(name.clone(), space.clone(), space.clone(), linearity, move |x| per_factor(x, op))
    };
    Ok(match spec {
        MapSpec::Identity => TameMapDescriptor::new(name, space.clone(), space.clone(), Linearity::Linear, |x| Ok(x.clone())),
        MapSpec::ShiftUp => endo(Linearity::Linear, shift_up),
        MapSpec::ShiftDown => endo(Linearity::Linear, shift_down),
        MapSpec::Derivative => endo(Linearity::Linear, derivative),
        MapSpec::CoeffSquare => endo(Linearity::Nonlinear, coeff_square),
        &MapSpec::Scale(c) => {
            TameMapDescriptor::new(name, space.clone(), space.clone(), Linearity::Linear, move |x| Ok(x.scaled(c)))
        }
        &MapSpec::Projection(i) => {
            let k = space.factor_count();
            let domain = space.power(i.max(2))?;
            if i == 0 {
                return Err(Error::range("projection index", 0.0, domain.factor_count() as f64));
            }
            TameMapDescriptor::new(name, domain, space.clone(), Linearity::Linear, move |x| {
                Ok(Element(x.0[(i - 1) * k..i * k].to_vec()))
            })
        }
        MapSpec::Product(a, b) => {
            let (a, b) = (build_map(a, space)?, build_map(b, space)?);
            product_of(name, &a, &b)?
        }
        MapSpec::Compose(a, b) => {
            let (a, b) = (build_map(a, space)?, build_map(b, space)?);
            compose_of(name, &a, &b)?
        }
    })
}

/// `f ↦ (a(f), b(f))`.
pub(crate) fn product_of(name: String, a: &TameMapDescriptor, b: &TameMapDescriptor) -> Result<TameMapDescriptor> {
    if !a.domain().compatible(b.domain()) {
        return Err(Error::invalid("product operands need a common domain"));
    }
    let codomain = GradedSpace::product(&[a.codomain().clone(), b.codomain().clone()])?;
    let linearity = if a.linearity() == Linearity::Linear && b.linearity() == Linearity::Linear {
        Linearity::Linear
    } else {
        Linearity::Nonlinear
    };
    let (ea, eb) = (a.evaluator(), b.evaluator());
    Ok(TameMapDescriptor::new(name, a.domain().clone(), codomain, linearity, move |x| {
        Ok(Element::concat(alloc::vec![ea(x)?, eb(x)?]))
    })
    .with_region(a.region()))
}

/// `a ∘ b`.
pub(crate) fn compose_of(name: String, a: &TameMapDescriptor, b: &TameMapDescriptor) -> Result<TameMapDescriptor> {
    if !b.codomain().compatible(a.domain()) {
        return Err(Error::invalid("composition operands do not chain"));
    }
    let linearity = if a.linearity() == Linearity::Linear && b.linearity() == Linearity::Linear {
        Linearity::Linear
    } else {
        Linearity::Nonlinear
    };
    let (ea, eb) = (a.evaluator(), b.evaluator());
    Ok(TameMapDescriptor::new(name, b.domain().clone(), a.codomain().clone(), linearity, move |x| ea(&eb(x)?))
        .with_region(b.region()))
}
