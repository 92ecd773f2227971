//! Rollout decoding over any [`SuccessorSource`].
//!
//! A [`Decoder`] is bound to one source, one horizon and one step rule. Every
//! intermediate result (successor lists, base-policy tails, rollout decisions
//! at `(level, k, x)`, lookahead subtree maxima) is a pure function of its key,
//! so it is memoized and reused across steps and across start states. Costs
//! are stored alongside each memoized value and charged again on reuse.

use std::collections::HashMap;
use std::rc::Rc;

use crate::error::{Error, Result};
use crate::model::{LogProb, Trajectory};
use crate::policies::{Candidate, CostCounters, Policy, RolloutSpec, SuccessorSource};

#[derive(Debug, Clone, Copy)]
struct Scored {
    log_prob: f64,
    cost: CostCounters,
}

impl Scored {
    const EMPTY: Scored = Scored {
        log_prob: 0.0,
        cost: CostCounters {
            comparisons: 0,
            base_policy_steps: 0,
        },
    };
}

#[derive(Debug, Clone)]
struct Decision<S> {
    next: S,
    log_prob: f64,
    cost: CostCounters,
}

/// One decision: the selected successor, its transition log-probability and
/// the work it took.
#[derive(Debug, Clone, PartialEq)]
pub struct Step<S> {
    pub next: S,
    pub log_prob: LogProb,
    pub cost: CostCounters,
}

enum Rule {
    Greedy,
    Rollout(RolloutSpec),
}

type Tails<S> = HashMap<(usize, S, usize), Scored>;
type Subtrees<S> = HashMap<(usize, usize, S), Scored>;
type Ranked<S> = Rc<[Candidate<S>]>;
type Decisions<S> = HashMap<(usize, S), Decision<S>>;

pub struct Decoder<'a, Src: SuccessorSource + ?Sized> {
    source: &'a Src,
    horizon: usize,
    rule: Rule,
    width: Option<usize>,
    lists: HashMap<Src::State, Ranked<Src::State>>,
    greedy_tails: HashMap<(Src::State, usize), Scored>,
    /// Indexed by rollout level.
    decisions: Vec<Decisions<Src::State>>,
    policy_tails: Vec<Tails<Src::State>>,
    subtrees: Vec<Subtrees<Src::State>>,
}

impl<'a, Src: SuccessorSource + ?Sized> Decoder<'a, Src> {
    /// Fails for [`Policy::Optimal`], which needs the whole state space.
    pub fn new(source: &'a Src, horizon: usize, policy: &Policy) -> Result<Self> {
        let (rule, width, levels) = match policy {
            Policy::Greedy => (Rule::Greedy, None, 0),
            Policy::Rollout(spec) => {
                spec.validate()?;
                (Rule::Rollout(*spec), spec.width, spec.level + 1)
            }
            Policy::Optimal => {
                return Err(Error::Capability(
                    "the most likely policy needs an enumerable chain".into(),
                ))
            }
        };
        Ok(Decoder {
            source,
            horizon,
            rule,
            width,
            lists: HashMap::new(),
            greedy_tails: HashMap::new(),
            decisions: (0..levels).map(|_| HashMap::new()).collect(),
            policy_tails: (0..levels).map(|_| HashMap::new()).collect(),
            subtrees: (0..levels).map(|_| HashMap::new()).collect(),
        })
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Runs the step rule from `k = 0` to `N - 1`. The trajectory's
    /// log-probability is the left-to-right sum of the chosen transitions.
    ///
    /// A failure at some step is returned as [`Error::PartialDecode`] with
    /// the states selected before it.
    pub fn decode(&mut self, x0: &Src::State) -> Result<(Trajectory<Src::State>, CostCounters)> {
        let mut states = Vec::with_capacity(self.horizon);
        let mut cost = CostCounters::default();
        let mut log_prob = LogProb::ONE;
        let mut cur = x0.clone();
        for k in 0..self.horizon {
            let step = match self.step(&cur, k) {
                Ok(s) => s,
                Err(e) => {
                    return Err(Error::PartialDecode {
                        states: states.iter().map(ToString::to_string).collect(),
                        source: Box::new(e),
                    })
                }
            };
            cost += step.cost;
            log_prob += step.log_prob;
            states.push(step.next.clone());
            cur = step.next;
        }
        Ok((
            Trajectory {
                start: x0.clone(),
                states,
                log_prob,
            },
            cost,
        ))
    }

    /// The state selected at `x` at time `k`.
    pub fn step(&mut self, x: &Src::State, k: usize) -> Result<Step<Src::State>> {
        let d = self.decide_top(k, x)?;
        Ok(Step {
            next: d.next,
            log_prob: LogProb::new(d.log_prob)?,
            cost: d.cost,
        })
    }

    fn decide_top(&mut self, k: usize, x: &Src::State) -> Result<Decision<Src::State>> {
        if k >= self.horizon {
            return Err(Error::invalid(format!(
                "step {k} is not before the horizon {}",
                self.horizon
            )));
        }
        match self.rule {
            Rule::Greedy => self.greedy_next(x),
            Rule::Rollout(spec) => self.decide(spec.level, k, x),
        }
    }

    fn list(&mut self, s: &Src::State) -> Result<Rc<[Candidate<Src::State>]>> {
        if let Some(l) = self.lists.get(s) {
            return Ok(Rc::clone(l));
        }
        let ranked = self.source.ranked_successors(s, self.width)?;
        if ranked.is_empty() {
            return Err(Error::InvalidModel(format!("state {s} has no successors")));
        }
        let list: Rc<[Candidate<Src::State>]> = ranked.into();
        self.lists.insert(s.clone(), Rc::clone(&list));
        Ok(list)
    }

    fn greedy_next(&mut self, x: &Src::State) -> Result<Decision<Src::State>> {
        let list = self.list(x)?;
        let top = &list[0];
        Ok(Decision {
            next: top.state.clone(),
            log_prob: top.log_prob.value(),
            cost: CostCounters {
                comparisons: list.len() as u64,
                base_policy_steps: 0,
            },
        })
    }

    fn spec(&self) -> RolloutSpec {
        match self.rule {
            Rule::Rollout(spec) => spec,
            Rule::Greedy => unreachable!("rollout internals used by a greedy decoder"),
        }
    }

    /// Effective lookahead at step `k` and the base-policy tail length after it.
    fn window(&self, k: usize) -> (usize, usize) {
        let spec = self.spec();
        let ell = spec.lookahead.min(self.horizon - k);
        let remaining = self.horizon - k - ell;
        let tail = spec.truncation.map_or(remaining, |m| m.min(remaining));
        (ell, tail)
    }

    fn greedy_tail(&mut self, y: &Src::State, steps: usize) -> Result<Scored> {
        let mut pending = Vec::new();
        let mut cur = y.clone();
        let mut rem = steps;
        let mut acc = loop {
            if rem == 0 {
                break Scored::EMPTY;
            }
            if let Some(s) = self.greedy_tails.get(&(cur.clone(), rem)) {
                break *s;
            }
            let d = self.greedy_next(&cur)?;
            pending.push((cur, rem, d.log_prob, d.cost.comparisons));
            cur = d.next;
            rem -= 1;
        };
        while let Some((state, rem, lp, comparisons)) = pending.pop() {
            acc = Scored {
                log_prob: lp + acc.log_prob,
                cost: acc.cost
                    + CostCounters {
                        comparisons,
                        base_policy_steps: 1,
                    },
            };
            self.greedy_tails.insert((state, rem), acc);
        }
        Ok(acc)
    }

    /// Follows the level-`level` rollout policy for `steps` steps from `y`,
    /// starting at time `t`.
    fn policy_tail(
        &mut self,
        level: usize,
        t: usize,
        y: &Src::State,
        steps: usize,
    ) -> Result<Scored> {
        let mut pending = Vec::new();
        let (mut time, mut cur, mut rem) = (t, y.clone(), steps);
        let mut acc = loop {
            if rem == 0 {
                break Scored::EMPTY;
            }
            if let Some(s) = self.policy_tails[level].get(&(time, cur.clone(), rem)) {
                break *s;
            }
            let d = self.decide(level, time, &cur)?;
            pending.push((time, cur, rem, d.log_prob, d.cost.comparisons));
            cur = d.next;
            time += 1;
            rem -= 1;
        };
        while let Some((time, state, rem, lp, comparisons)) = pending.pop() {
            acc = Scored {
                log_prob: lp + acc.log_prob,
                cost: acc.cost
                    + CostCounters {
                        comparisons,
                        base_policy_steps: 1,
                    },
            };
            self.policy_tails[level].insert((time, state, rem), acc);
        }
        Ok(acc)
    }

    /// Tail of the base policy of a level-`level` rollout.
    fn base_tail(
        &mut self,
        level: usize,
        t: usize,
        y: &Src::State,
        steps: usize,
    ) -> Result<Scored> {
        if level == 0 {
            self.greedy_tail(y, steps)
        } else {
            self.policy_tail(level - 1, t, y, steps)
        }
    }

    /// Best value over the `depth`-step continuations of `y` inside the
    /// lookahead tree rooted at step `k`, each scored with its base-policy
    /// tail. Charges one comparison per leaf plus the cost of its tail.
    fn subtree(&mut self, level: usize, k: usize, depth: usize, y: &Src::State) -> Result<Scored> {
        let key = (k, depth, y.clone());
        if let Some(s) = self.subtrees[level].get(&key) {
            return Ok(*s);
        }
        let scored = if depth == 0 {
            let (ell, tail) = self.window(k);
            let base = self.base_tail(level, k + ell, y, tail)?;
            Scored {
                log_prob: base.log_prob,
                cost: CostCounters {
                    comparisons: base.cost.comparisons.saturating_add(1),
                    base_policy_steps: base.cost.base_policy_steps,
                },
            }
        } else {
            let list = self.list(y)?;
            let mut best = f64::NEG_INFINITY;
            let mut cost = CostCounters::default();
            for c in list.iter() {
                let sub = self.subtree(level, k, depth - 1, &c.state)?;
                best = best.max(c.log_prob.value() + sub.log_prob);
                cost += sub.cost;
            }
            Scored {
                log_prob: best,
                cost,
            }
        };
        self.subtrees[level].insert(key, scored);
        Ok(scored)
    }

    fn decide(&mut self, level: usize, k: usize, x: &Src::State) -> Result<Decision<Src::State>> {
        if let Some(d) = self.decisions[level].get(&(k, x.clone())) {
            return Ok(d.clone());
        }
        let (ell, _) = self.window(k);
        let list = self.list(x)?;
        let mut cost = CostCounters::default();
        let mut best: Option<(f64, &Candidate<Src::State>)> = None;
        for c in list.iter() {
            let sub = self.subtree(level, k, ell - 1, &c.state)?;
            cost += sub.cost;
            let q = c.log_prob.value() + sub.log_prob;
            let better = match best {
                None => true,
                Some((b, incumbent)) => q > b || (q == b && c.state < incumbent.state),
            };
            if better {
                best = Some((q, c));
            }
        }
        let (_, chosen) = best.expect("successor lists are non-empty");
        let d = Decision {
            next: chosen.state.clone(),
            log_prob: chosen.log_prob.value(),
            cost,
        };
        self.decisions[level].insert((k, x.clone()), d.clone());
        Ok(d)
    }
}
