use super::{FinitePath, Move, PtaState, Scheduler, SemanticsError};
use crate::model::{Constraint, Dtra, ModeId, Pta, Valuation};
use crate::product::{ProductPta, SelectorId};

/// The selector of mode `q` whose guards hold at automaton valuation `mu`.
pub fn selector_at(
    product: &ProductPta,
    dtra: &Dtra,
    q: ModeId,
    mu: &Valuation,
) -> Result<SelectorId, SemanticsError> {
    let mut guards: Vec<Constraint> = Vec::with_capacity(product.symbols.len());
    for &b in &product.symbols {
        let rule = dtra
            .enabled_rule(q, b, mu)?
            .ok_or_else(|| SemanticsError::Stuck {
                mode: dtra.mode_name(q).to_string(),
                symbol: format!("{:?}", dtra.symbol(b)),
                valuation: mu.to_string(),
            })?;
        guards.push(rule.guard.clone());
    }
    product
        .mode_selectors
        .get(&q)
        .into_iter()
        .flatten()
        .copied()
        .find(|h| product.selectors[h.0] == guards)
        .ok_or_else(|| {
            SemanticsError::InverseLookup(format!(
                "no selector of mode `{}` matches {mu}",
                dtra.mode_name(q)
            ))
        })
}

/// Maps a path of `pta` to the corresponding path of the product: every
/// action `a` becomes `(a, h)` with `h` the selector enabled at the current
/// automaton valuation, and locations gain the automaton mode.
pub fn transform_path(
    product: &ProductPta,
    pta: &Pta,
    dtra: &Dtra,
    path: &FinitePath,
) -> Result<FinitePath, SemanticsError> {
    path.check_alternation()?;
    let missing = |l, q: ModeId| {
        SemanticsError::InverseLookup(format!(
            "product has no location for `{}` in mode `{}`",
            pta.location(l).name,
            dtra.mode_name(q)
        ))
    };
    let start = &path.states[0];
    let mut q = product.initial_mode;
    let mut mu = Valuation::zero(dtra.clock_count());
    let mut out = FinitePath::new(PtaState {
        location: product
            .location_of(start.location, q)
            .ok_or_else(|| missing(start.location, q))?,
        valuation: start.valuation.concat(&mu),
    });
    for (i, mv) in path.moves.iter().enumerate() {
        let next = &path.states[i + 1];
        let pmove = match mv {
            Move::Delay(t) => {
                mu = mu.elapse(t)?;
                Move::Delay(t.clone())
            }
            Move::Action(a) => {
                let h = selector_at(product, dtra, q, &mu)?;
                let pa = product.action_of(*a, h).ok_or_else(|| {
                    SemanticsError::InverseLookup(format!(
                        "product has no action for `{}` with selector {}",
                        pta.actions()[a.0],
                        h.0
                    ))
                })?;
                let b = dtra.symbol_id(pta.labels(next.location)).ok_or_else(|| {
                    SemanticsError::Stuck {
                        mode: dtra.mode_name(q).to_string(),
                        symbol: format!("{:?}", pta.labels(next.location)),
                        valuation: mu.to_string(),
                    }
                })?;
                let rule = dtra
                    .enabled_rule(q, b, &mu)?
                    .ok_or_else(|| SemanticsError::Stuck {
                        mode: dtra.mode_name(q).to_string(),
                        symbol: format!("{:?}", pta.labels(next.location)),
                        valuation: mu.to_string(),
                    })?;
                q = rule.target;
                mu = mu.reset(rule.resets)?;
                Move::Action(pa)
            }
        };
        out.push(
            pmove,
            PtaState {
                location: product
                    .location_of(next.location, q)
                    .ok_or_else(|| missing(next.location, q))?,
                valuation: next.valuation.concat(&mu),
            },
        );
    }
    Ok(out)
}

/// Forgets the automaton part of a product path.
pub fn project_path(product: &ProductPta, path: &FinitePath) -> FinitePath {
    let state = |s: &PtaState| PtaState {
        location: product.location_pairs[s.location.0].0,
        valuation: product.split_valuation(&s.valuation).0,
    };
    FinitePath {
        states: path.states.iter().map(state).collect(),
        moves: path
            .moves
            .iter()
            .map(|m| match m {
                Move::Delay(t) => Move::Delay(t.clone()),
                Move::Action(a) => Move::Action(product.action_pairs[a.0].0),
            })
            .collect(),
    }
}

/// The product scheduler induced by a scheduler of the original PTA: it
/// finds the unique preimage of the product path and pairs the chosen action
/// with the selector enabled at the current automaton valuation.
pub struct ThetaScheduler<'a, S: ?Sized> {
    pub sigma: &'a S,
    pub product: &'a ProductPta,
    pub pta: &'a Pta,
    pub dtra: &'a Dtra,
}

impl<S: Scheduler + ?Sized> Scheduler for ThetaScheduler<'_, S> {
    fn decide(&self, _product_pta: &Pta, path: &FinitePath) -> Result<Move, SemanticsError> {
        let rho = project_path(self.product, path);
        if transform_path(self.product, self.pta, self.dtra, &rho)? != *path {
            return Err(SemanticsError::InverseLookup(
                "path is not the image of a path of the original PTA".into(),
            ));
        }
        match self.sigma.decide(self.pta, &rho)? {
            Move::Delay(t) => Ok(Move::Delay(t)),
            Move::Action(a) => {
                let (_, q) = self.product.location_pairs[path.last().location.0];
                let (_, mu) = self.product.split_valuation(&path.last().valuation);
                let h = selector_at(self.product, self.dtra, q, &mu)?;
                self.product
                    .action_of(a, h)
                    .map(Move::Action)
                    .ok_or_else(|| {
                        SemanticsError::InverseLookup(format!(
                            "product has no action for `{}` with selector {}",
                            self.pta.actions()[a.0],
                            h.0
                        ))
                    })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::{gen_task_completion, TaskParams};
    use crate::model::validate::complete_to_total;
    use crate::product::{build_product, ProductOptions};
    use crate::semantics::{path_weight, sample_path, UniformIntegerDelay};

    #[test]
    fn sampled_paths_commute_with_transformation() {
        let inst = gen_task_completion(&TaskParams::two_task()).unwrap();
        let dtra = complete_to_total(&inst.dtra).unwrap();
        let product =
            build_product(&inst.pta, &dtra, inst.mode, ProductOptions::default()).unwrap();
        for seed in 0..10 {
            let sigma = UniformIntegerDelay { max: 3, seed };
            let rho = sample_path(&inst.pta, &sigma, 12, seed).unwrap();
            let image = transform_path(&product, &inst.pta, &dtra, &rho).unwrap();
            assert_eq!(project_path(&product, &image), rho);
            assert_eq!(
                path_weight(&inst.pta, &rho).unwrap(),
                path_weight(&product.pta, &image).unwrap()
            );
            let theta = ThetaScheduler {
                sigma: &sigma,
                product: &product,
                pta: &inst.pta,
                dtra: &dtra,
            };
            assert_eq!(sample_path(&product.pta, &theta, 12, seed).unwrap(), image);
        }
    }
}
