//! Constraint registry: `sphere:<n>`, `spheres:<n1,n2,…>`, `linear:<a0,a1,…>`,
//! `affine:<row;row;…|c0,c1,…>` (`φ = A q − c`) and `custom:<path>` for a
//! JSON polynomial table `{"domain_dim": D, "outputs": [[{"coef", "powers"}]]}`.

use std::fmt;
use std::path::PathBuf;

use tamef_core::implicit::{ConstraintMap, Polynomial, SequenceLayout};
use tamef_core::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum ConstraintSpec {
    Sphere(usize),
    Spheres(Vec<usize>),
    Linear(Vec<f64>),
    Affine { rows: Vec<Vec<f64>>, offset: Vec<f64> },
    Custom(PathBuf),
}

fn floats(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| Error::InvalidInput(format!("'{t}' is not a number"))))
        .collect()
}

fn levels(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|t| t.trim().parse::<usize>().map_err(|_| Error::InvalidInput(format!("'{t}' is not a level"))))
        .collect()
}

impl ConstraintSpec {
    pub fn parse(s: &str) -> Result<Self> {
        let (head, args) = s
            .split_once(':')
            .ok_or_else(|| Error::InvalidInput(format!("constraint '{s}' needs arguments after ':'")))?;
        match head {
            "sphere" => {
                let l = levels(args)?;
                match l.as_slice() {
                    [n] => Ok(ConstraintSpec::Sphere(*n)),
                    _ => Err(Error::InvalidInput("sphere takes one level; use spheres:<n1,n2,…>".into())),
                }
            }
            "spheres" => Ok(ConstraintSpec::Spheres(levels(args)?)),
            "linear" => Ok(ConstraintSpec::Linear(floats(args)?)),
            "affine" => {
                let (m, c) = args
                    .split_once('|')
                    .ok_or_else(|| Error::InvalidInput("affine needs 'rows|offset'".into()))?;
                let rows = m.split(';').map(floats).collect::<Result<Vec<_>>>()?;
                Ok(ConstraintSpec::Affine { rows, offset: floats(c)? })
            }
            "custom" if !args.is_empty() => Ok(ConstraintSpec::Custom(PathBuf::from(args))),
            _ => Err(Error::InvalidInput(format!(
                "unknown constraint '{s}' (expected sphere, spheres, linear, affine or custom)"
            ))),
        }
    }

    /// Builds the constraint on `Σ(ℝ^fiber_dim)` truncated at `degree`;
    /// custom polynomials carry their own layout.
    pub fn build(&self, layout: SequenceLayout) -> Result<ConstraintMap> {
        match self {
            ConstraintSpec::Sphere(n) => ConstraintMap::sphere(layout, *n),
            ConstraintSpec::Spheres(l) => ConstraintMap::spheres(layout, l),
            ConstraintSpec::Linear(a) => ConstraintMap::linear(layout, a),
            ConstraintSpec::Affine { rows, offset } => ConstraintMap::affine(layout, rows, offset),
            ConstraintSpec::Custom(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", path.display())))?;
                let poly: Polynomial = serde_json::from_str(&text)
                    .map_err(|e| Error::InvalidInput(format!("bad polynomial table {}: {e}", path.display())))?;
                ConstraintMap::polynomial(self.to_string(), poly)
            }
        }
    }
}

impl fmt::Display for ConstraintSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        match self {
            ConstraintSpec::Sphere(n) => write!(f, "sphere:{n}"),
            ConstraintSpec::Spheres(l) => {
                write!(f, "spheres:{}", l.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","))
            }
            ConstraintSpec::Linear(a) => write!(f, "linear:{}", join(a)),
            ConstraintSpec::Affine { rows, offset } => {
                write!(f, "affine:{}|{}", rows.iter().map(|r| join(r)).collect::<Vec<_>>().join(";"), join(offset))
            }
            ConstraintSpec::Custom(p) => write!(f, "custom:{}", p.display()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_round_trips() {
        for s in ["sphere:0", "spheres:0,1", "linear:1,-2.5", "affine:1,0;0,1|1,2", "custom:poly.json"] {
            assert_eq!(ConstraintSpec::parse(s).unwrap().to_string(), s);
        }
        assert_eq!(ConstraintSpec::parse("spheres:0, 2").unwrap(), ConstraintSpec::Spheres(vec![0, 2]));
    }

    #[test]
    fn parse_errors() {
        for s in ["sphere", "sphere:x", "sphere:0,1", "affine:1,2", "torus:1", "custom:", "linear:"] {
            assert!(matches!(ConstraintSpec::parse(s), Err(Error::InvalidInput(_))), "{s}");
        }
    }

    #[test]
    fn builds_match_core_names() {
        let layout = SequenceLayout::scalar(4);
        for s in ["sphere:1", "spheres:0,1", "linear:1,2", "affine:1,1|1"] {
            let c = ConstraintSpec::parse(s).unwrap().build(layout).unwrap();
            assert_eq!(c.name(), s);
        }
    }

    #[test]
    fn custom_polynomial_from_json() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("q.json");
        std::fs::write(&p, r#"{"domain_dim": 1, "outputs": [[{"coef": 1.0, "powers": [[0, 2]]}, {"coef": -1.0}]]}"#)
            .unwrap();
        let spec = ConstraintSpec::parse(&format!("custom:{}", p.display())).unwrap();
        let c = spec.build(SequenceLayout::scalar(8)).unwrap();
        assert_eq!(c.dim(), 1);
        assert_eq!(c.eval(&[3.0]).unwrap(), vec![8.0]);
        let missing = ConstraintSpec::Custom(dir.path().join("none.json"));
        assert!(matches!(missing.build(SequenceLayout::scalar(1)), Err(Error::InvalidInput(_))));
    }
}
