use super::{Mdp, StateSet};

/// A maximal end component: its states and, per state, the moves that stay
/// inside it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EndComponent {
    pub states: Vec<usize>,
    pub moves: Vec<usize>,
}

impl EndComponent {
    pub fn contains(&self, s: usize) -> bool {
        self.states.binary_search(&s).is_ok()
    }

    pub fn touches(&self, set: &[bool]) -> bool {
        self.states.iter().any(|&s| set[s])
    }
}

/// Maximal end components of the whole MDP.
pub fn mec_decompose(mdp: &Mdp) -> Vec<EndComponent> {
    mec_decompose_within(mdp, &vec![true; mdp.num_states()])
}

/// Maximal end components of the sub-MDP on `allowed` states, keeping only
/// moves whose support lies in `allowed`. Components are sorted by their
/// least state.
pub fn mec_decompose_within(mdp: &Mdp, allowed: &[bool]) -> Vec<EndComponent> {
    let n = mdp.num_states();
    let mut alive: StateSet = allowed.to_vec();
    let mut live_move = vec![false; mdp.num_moves()];
    for s in 0..n {
        if alive[s] {
            for m in mdp.moves(s) {
                live_move[m] = true;
            }
        }
    }
    let owner = mdp.move_owner();
    let (pred_start, preds) = mdp.predecessor_moves();
    let mut live_count = vec![0u32; n];
    let mut queue: Vec<usize> = Vec::new();
    let kill_move = |m: usize,
                     live_move: &mut [bool],
                     live_count: &mut [u32],
                     alive: &[bool],
                     queue: &mut Vec<usize>| {
        if live_move[m] {
            live_move[m] = false;
            let s = owner[m] as usize;
            live_count[s] -= 1;
            if live_count[s] == 0 && alive[s] {
                queue.push(s);
            }
        }
    };
    for s in 0..n {
        if !alive[s] {
            continue;
        }
        live_count[s] = mdp.moves(s).len() as u32;
        for m in mdp.moves(s) {
            if mdp.targets(m).any(|t| !alive[t]) {
                kill_move(m, &mut live_move, &mut live_count, &alive, &mut queue);
            }
        }
    }
    let mut scc = vec![u32::MAX; n];
    loop {
        // drop states without moves, and the moves entering them
        while let Some(s) = queue.pop() {
            if !alive[s] {
                continue;
            }
            alive[s] = false;
            for &m in &preds[pred_start[s] as usize..pred_start[s + 1] as usize] {
                kill_move(
                    m as usize,
                    &mut live_move,
                    &mut live_count,
                    &alive,
                    &mut queue,
                );
            }
        }
        tarjan(mdp, &alive, &live_move, &mut scc);
        let mut changed = false;
        for s in 0..n {
            if !alive[s] {
                continue;
            }
            for m in mdp.moves(s) {
                if live_move[m] && mdp.targets(m).any(|t| scc[t] != scc[s]) {
                    kill_move(m, &mut live_move, &mut live_count, &alive, &mut queue);
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }

    let mut by_scc: std::collections::BTreeMap<u32, EndComponent> = Default::default();
    for s in 0..n {
        if !alive[s] {
            continue;
        }
        let entry = by_scc.entry(scc[s]).or_insert_with(|| EndComponent {
            states: Vec::new(),
            moves: Vec::new(),
        });
        entry.states.push(s);
        entry.moves.extend(mdp.moves(s).filter(|&m| live_move[m]));
    }
    let mut out: Vec<EndComponent> = by_scc.into_values().collect();
    out.sort_by_key(|c| c.states[0]);
    out
}

/// Iterative Tarjan over the graph of live moves; writes component ids.
fn tarjan(mdp: &Mdp, alive: &[bool], live_move: &[bool], comp: &mut [u32]) {
    let n = mdp.num_states();
    const UNSEEN: u32 = u32::MAX;
    let mut index = vec![UNSEEN; n];
    let mut low = vec![0u32; n];
    let mut on_stack = vec![false; n];
    let mut stack: Vec<usize> = Vec::new();
    let mut next_index = 0u32;
    let mut next_comp = 0u32;
    // (state, move cursor, branch cursor)
    let mut call: Vec<(usize, usize, usize)> = Vec::new();
    for c in comp.iter_mut() {
        *c = UNSEEN;
    }
    for root in 0..n {
        if !alive[root] || index[root] != UNSEEN {
            continue;
        }
        index[root] = next_index;
        low[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;
        let first = mdp.moves(root).start;
        call.push((root, first, usize::MAX));
        while let Some(&(s, mut m, mut b)) = call.last() {
            let top = call.len() - 1;
            let end = mdp.moves(s).end;
            let mut child = None;
            'scan: while m < end {
                if !live_move[m] {
                    m += 1;
                    b = usize::MAX;
                    continue;
                }
                let range = mdp.branches(m);
                if b == usize::MAX {
                    b = range.start;
                }
                while b < range.end {
                    let t = mdp.target(b);
                    b += 1;
                    if index[t] == UNSEEN {
                        child = Some(t);
                        break 'scan;
                    } else if on_stack[t] {
                        low[s] = low[s].min(index[t]);
                    }
                }
                m += 1;
                b = usize::MAX;
            }
            call[top] = (s, m, b);
            if let Some(t) = child {
                index[t] = next_index;
                low[t] = next_index;
                next_index += 1;
                stack.push(t);
                on_stack[t] = true;
                call.push((t, mdp.moves(t).start, usize::MAX));
                continue;
            }
            call.pop();
            if low[s] == index[s] {
                loop {
                    let t = stack.pop().expect("tarjan stack");
                    on_stack[t] = false;
                    comp[t] = next_comp;
                    if t == s {
                        break;
                    }
                }
                next_comp += 1;
            }
            if let Some(&(parent, _, _)) = call.last() {
                low[parent] = low[parent].min(low[s]);
            }
        }
    }
}
