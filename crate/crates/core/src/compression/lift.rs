use super::{preimage_counts, Bound, CompressionCertificate, CompressionMode};
use crate::error::{Error, Result};
use crate::model::{FiniteSubrelation, Instance, PointId};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LiftDirection {
    /// Quotient certificate to a point map over the same F.
    QuotientToOverF,
    /// Over-F certificate of a constant cocycle to an injective plain map.
    OverFConstantToPlain,
}

/// Lifts a certificate between modes with ascending-id pairing as the selection rule.
pub fn lift_compression(
    inst: &Instance,
    cert: &CompressionCertificate,
    direction: LiftDirection,
) -> Result<CompressionCertificate> {
    cert.check_shape(inst)?;
    match direction {
        LiftDirection::QuotientToOverF => {
            if cert.mode != CompressionMode::Quotient {
                return Err(Error::InapplicableLift("expected a quotient-mode certificate".into()));
            }
            let f = &cert.subrelation;
            let mut map = vec![None; inst.len()];
            for (a, target) in cert.map.iter().enumerate() {
                for (i, &x) in f.block(a).iter().enumerate() {
                    map[x] = target.map(|b| {
                        let tb = f.block(b);
                        tb[i % tb.len()]
                    });
                }
            }
            let bound = Bound::from_count(preimage_counts(inst.len(), &map).into_iter().max().unwrap_or(0));
            CompressionCertificate::new(inst, CompressionMode::OverF, f.clone(), map, bound, cert.scope.clone())
        }
        LiftDirection::OverFConstantToPlain => {
            if cert.mode != CompressionMode::OverF {
                return Err(Error::InapplicableLift("expected an over-F certificate".into()));
            }
            let constant = inst.classes().iter().all(|m| m.iter().all(|&x| inst.potential(x) == inst.potential(m[0])));
            if !constant {
                return Err(Error::InapplicableLift("cocycle is not constant".into()));
            }
            let f = &cert.subrelation;
            let mut sources: Vec<Vec<PointId>> = vec![Vec::new(); f.len()];
            for (x, t) in cert.map.iter().enumerate() {
                if let Some(y) = t {
                    sources[f.block_of(*y)].push(x);
                }
            }
            let mut map = vec![None; inst.len()];
            for (b, src) in sources.iter().enumerate() {
                let targets = f.block(b);
                if src.len() > targets.len() {
                    return Err(Error::InapplicableLift(format!(
                        "block of `{}` receives more points than it holds",
                        inst.name(targets[0])
                    )));
                }
                for (x, &y) in src.iter().zip(targets) {
                    map[*x] = Some(y);
                }
            }
            CompressionCertificate::new(
                inst,
                CompressionMode::Plain,
                FiniteSubrelation::identity(inst.len()),
                map,
                Bound::Injective,
                cert.scope.clone(),
            )
        }
    }
}
