use thiserror::Error;

use crate::model::{
    Branch, ClockId, ClockSet, Constraint, Distribution, LocationId, ModelError, Pta, PtaBuilder,
};

pub const TICK_LABEL: &str = "tick";

pub const TICK_CLOCK: &str = "z_tick";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TickError {
    #[error("name `{0}` is already used by the model")]
    NameCollision(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// A PTA with a copy of every location reached exactly once per time unit.
///
/// Location `l` keeps its index; its copy is `l + original_locations`.
#[derive(Debug, Clone)]
pub struct TickedPta {
    pub pta: Pta,
    pub original_locations: usize,
    pub original_actions: usize,
    pub tick_clock: ClockId,
}

impl TickedPta {
    pub fn is_copy(&self, l: LocationId) -> bool {
        l.0 >= self.original_locations
    }

    pub fn original(&self, l: LocationId) -> LocationId {
        LocationId(l.0 % self.original_locations)
    }

    pub fn copy_of(&self, l: LocationId) -> LocationId {
        LocationId(l.0 + self.original_locations)
    }
}

pub fn tick_transform(pta: &Pta) -> Result<TickedPta, TickError> {
    if pta.clocks().iter().any(|c| c == TICK_CLOCK) {
        return Err(TickError::NameCollision(TICK_CLOCK.into()));
    }
    if pta.atomic_props().contains(TICK_LABEL) {
        return Err(TickError::NameCollision(TICK_LABEL.into()));
    }
    let n = pta.locations().len();
    let copy_name = |name: &str| format!("{name}~tick");
    for l in pta.locations() {
        let copy = copy_name(&l.name);
        if pta.location_id(&copy).is_some() {
            return Err(TickError::NameCollision(copy));
        }
        for action in [format!("tick@{}", l.name), format!("return@{}", l.name)] {
            if pta.action_id(&action).is_some() {
                return Err(TickError::NameCollision(action));
            }
        }
    }

    let mut b = PtaBuilder::new();
    for c in pta.clocks() {
        b.clock(c.clone());
    }
    let z = b.clock(TICK_CLOCK);
    for a in pta.actions() {
        b.action(a.clone());
    }
    let mut props = pta.atomic_props().clone();
    props.insert(TICK_LABEL.to_string());
    b.atomic_props(props);
    for l in pta.locations() {
        b.location(
            l.name.clone(),
            l.invariant.clone().and(Constraint::upper(z, 1)),
            l.labels.iter().cloned(),
        );
    }
    for l in pta.locations() {
        // the original invariant still holds, no time passes in the copy
        b.location(
            copy_name(&l.name),
            l.invariant.clone().and(Constraint::upper(z, 0)),
            l.labels.iter().cloned().chain([TICK_LABEL.to_string()]),
        );
    }
    for e in pta.edges() {
        b.edge(
            e.source,
            e.action,
            e.guard.clone(),
            e.distribution.branches().to_vec(),
        );
    }
    for (i, l) in pta.locations().iter().enumerate() {
        let tick = b.action(format!("tick@{}", l.name));
        let back = b.action(format!("return@{}", l.name));
        let here = LocationId(i);
        let copy = LocationId(i + n);
        b.edge(
            here,
            tick,
            Constraint::equals(z, 1),
            dirac(ClockSet::singleton(z), copy),
        );
        b.edge(copy, back, Constraint::True, dirac(ClockSet::empty(), here));
    }
    b.initial(pta.initial());
    Ok(TickedPta {
        pta: b.build()?,
        original_locations: n,
        original_actions: pta.actions().len(),
        tick_clock: z,
    })
}

fn dirac(resets: ClockSet, target: LocationId) -> Vec<Branch> {
    Distribution::dirac(resets, target).branches().to_vec()
}
