//! Core data model: goods, rankings, instances, bundles, allocations, and
//! the lexicographic bundle order, plus the text formats and the exhaustive
//! enumerators used by the audit and oracle layers.
//!
//! Agents and goods are 0-indexed everywhere in the API; the text formats
//! use 1-indexed agents and good labels. Bundles are bitmasks over good
//! indices, so instances are limited to [`MAX_GOODS`] goods.

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

/// Upper bound on the number of goods in an instance (bundles are `u128` bitmasks).
pub const MAX_GOODS: usize = 128;

/// Default cap on `(m!)^n` for profile enumeration.
pub const DEFAULT_PROFILE_CAP: u64 = 100_000_000;

/// Default cap on the number of allocations yielded by [`enumerate_allocations`].
pub const DEFAULT_ALLOCATION_CAP: u64 = 100_000_000;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid instance: {0}")]
    Invalid(String),
    #[error("domain too large: {size} exceeds cap {cap}")]
    DomainTooLarge { size: u128, cap: u64 },
}

/// One indivisible good: a dense index plus a display label.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Good {
    pub id: usize,
    pub label: String,
}

/// A strict, complete linear order over all goods of an instance,
/// most-preferred first.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Ranking {
    order: Vec<usize>,
    pos: Vec<usize>,
}

impl Ranking {
    /// Builds a ranking from the given order (most-preferred first).
    /// Fails unless `order` is a permutation of `0..order.len()`.
    pub fn new(order: Vec<usize>) -> Result<Self, ModelError> {
        let m = order.len();
        let mut pos = vec![usize::MAX; m];
        for (p, &g) in order.iter().enumerate() {
            if g >= m {
                return Err(ModelError::Invalid(format!(
                    "ranking mentions good {g} but only {m} goods exist"
                )));
            }
            if pos[g] != usize::MAX {
                return Err(ModelError::Invalid(format!(
                    "ranking lists good {g} more than once"
                )));
            }
            pos[g] = p;
        }
        Ok(Ranking { order, pos })
    }

    /// The identity ranking `0 ≻ 1 ≻ … ≻ m−1`.
    pub fn identity(m: usize) -> Self {
        Ranking::new((0..m).collect()).expect("identity is a permutation")
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Good ids, most-preferred first.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// 1-based rank of a good: 1 = most preferred.
    ///
    /// Panics if `good` is not a good id of this ranking's instance.
    pub fn rank_of(&self, good: usize) -> usize {
        assert!(good < self.pos.len(), "unknown good id {good}");
        self.pos[good] + 1
    }

    /// 0-based position of a good (rank − 1).
    pub fn position(&self, good: usize) -> usize {
        assert!(good < self.pos.len(), "unknown good id {good}");
        self.pos[good]
    }

    /// The good at 0-based position `p`.
    pub fn good_at(&self, p: usize) -> usize {
        self.order[p]
    }

    /// Most preferred good among `set`, if any.
    pub fn best_of(&self, set: Bundle) -> Option<usize> {
        self.order.iter().copied().find(|&g| set.contains(g))
    }

    /// Maps a bundle into this ranking's position space: bit `p` is set iff
    /// the good at position `p` lies in `set`.
    pub fn to_position_mask(&self, set: Bundle) -> u128 {
        let mut out = 0u128;
        for g in set.iter() {
            out |= 1u128 << self.pos[g];
        }
        out
    }

    /// Applies a relabeling `pi` of the goods: if this ranking prefers `a` to
    /// `b`, the result prefers `pi[a]` to `pi[b]`.
    pub fn relabel(&self, pi: &[usize]) -> Ranking {
        Ranking::new(self.order.iter().map(|&g| pi[g]).collect())
            .expect("relabeling keeps a permutation")
    }
}

/// 1-based rank of `good` under ranking `r` (1 = most preferred).
pub fn rank_of(r: &Ranking, good: usize) -> usize {
    r.rank_of(good)
}

/// A set of good ids, stored as a bitmask.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Bundle(u128);

impl Bundle {
    pub const EMPTY: Bundle = Bundle(0);

    pub fn from_bits(bits: u128) -> Self {
        Bundle(bits)
    }

    pub fn singleton(g: usize) -> Self {
        Bundle(1u128 << g)
    }

    pub fn bits(self) -> u128 {
        self.0
    }

    pub fn contains(self, g: usize) -> bool {
        self.0 >> g & 1 == 1
    }

    pub fn with(self, g: usize) -> Self {
        Bundle(self.0 | 1u128 << g)
    }

    pub fn without(self, g: usize) -> Self {
        Bundle(self.0 & !(1u128 << g))
    }

    pub fn union(self, other: Bundle) -> Self {
        Bundle(self.0 | other.0)
    }

    pub fn intersection(self, other: Bundle) -> Self {
        Bundle(self.0 & other.0)
    }

    pub fn difference(self, other: Bundle) -> Self {
        Bundle(self.0 & !other.0)
    }

    pub fn is_disjoint(self, other: Bundle) -> bool {
        self.0 & other.0 == 0
    }

    pub fn is_subset(self, other: Bundle) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let g = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(g)
            }
        })
    }

    /// Full bundle over `m` goods.
    pub fn full(m: usize) -> Self {
        if m == 0 {
            Bundle(0)
        } else if m == 128 {
            Bundle(u128::MAX)
        } else {
            Bundle((1u128 << m) - 1)
        }
    }

    /// Remaps good ids through the relabeling `pi`.
    pub fn relabel(self, pi: &[usize]) -> Bundle {
        let mut out = Bundle::EMPTY;
        for g in self.iter() {
            out = out.with(pi[g]);
        }
        out
    }
}

impl FromIterator<usize> for Bundle {
    fn from_iter<T: IntoIterator<Item = usize>>(iter: T) -> Self {
        let mut b = Bundle::EMPTY;
        for g in iter {
            b = b.with(g);
        }
        b
    }
}

/// A set of agent ids, stored as a bitmask.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct AgentSet(u128);

impl AgentSet {
    pub const EMPTY: AgentSet = AgentSet(0);

    pub fn singleton(a: usize) -> Self {
        AgentSet(1u128 << a)
    }

    pub fn contains(self, a: usize) -> bool {
        self.0 >> a & 1 == 1
    }

    pub fn with(self, a: usize) -> Self {
        AgentSet(self.0 | 1u128 << a)
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let a = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(a)
            }
        })
    }
}

impl FromIterator<usize> for AgentSet {
    fn from_iter<T: IntoIterator<Item = usize>>(iter: T) -> Self {
        let mut s = AgentSet::EMPTY;
        for a in iter {
            s = s.with(a);
        }
        s
    }
}

/// A fair-division instance: `n` agents, `m` goods, one strict ranking per agent.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    goods: Arc<[Good]>,
    profile: Vec<Ranking>,
}

impl Instance {
    pub fn new(goods: Vec<Good>, profile: Vec<Ranking>) -> Result<Self, ModelError> {
        let m = goods.len();
        if m > MAX_GOODS {
            return Err(ModelError::Invalid(format!(
                "{m} goods exceed the supported maximum of {MAX_GOODS}"
            )));
        }
        if profile.is_empty() {
            return Err(ModelError::Invalid(
                "an instance needs at least one agent".into(),
            ));
        }
        for (i, g) in goods.iter().enumerate() {
            if g.id != i {
                return Err(ModelError::Invalid(format!(
                    "good ids must be dense: found id {} at index {i}",
                    g.id
                )));
            }
        }
        let mut labels: Vec<&str> = goods.iter().map(|g| g.label.as_str()).collect();
        labels.sort_unstable();
        if labels.windows(2).any(|w| w[0] == w[1]) {
            return Err(ModelError::Invalid("good labels must be unique".into()));
        }
        for (i, r) in profile.iter().enumerate() {
            if r.len() != m {
                return Err(ModelError::Invalid(format!(
                    "agent {} ranks {} goods, expected {m}",
                    i + 1,
                    r.len()
                )));
            }
        }
        Ok(Instance {
            goods: goods.into(),
            profile,
        })
    }

    /// Builds an instance with auto-generated labels `g1..gm`.
    pub fn from_orders(orders: Vec<Vec<usize>>) -> Result<Self, ModelError> {
        let m = orders.first().map_or(0, |o| o.len());
        let goods = default_goods(m);
        let profile = orders
            .into_iter()
            .map(Ranking::new)
            .collect::<Result<Vec<_>, _>>()?;
        Instance::new(goods, profile)
    }

    /// All agents get the same ranking (given most-preferred first).
    pub fn identical(n: usize, order: Vec<usize>) -> Result<Self, ModelError> {
        Instance::from_orders(vec![order; n])
    }

    pub fn n(&self) -> usize {
        self.profile.len()
    }

    pub fn m(&self) -> usize {
        self.goods.len()
    }

    pub fn goods(&self) -> &[Good] {
        &self.goods
    }

    pub fn shared_goods(&self) -> Arc<[Good]> {
        Arc::clone(&self.goods)
    }

    pub fn ranking(&self, agent: usize) -> &Ranking {
        &self.profile[agent]
    }

    pub fn profile(&self) -> &[Ranking] {
        &self.profile
    }

    /// Replaces one agent's ranking (used by misreport audits).
    pub fn with_ranking(&self, agent: usize, r: Ranking) -> Instance {
        let mut profile = self.profile.clone();
        profile[agent] = r;
        Instance {
            goods: Arc::clone(&self.goods),
            profile,
        }
    }

    pub fn good_index(&self, label: &str) -> Option<usize> {
        self.goods.iter().position(|g| g.label == label)
    }

    pub fn label(&self, good: usize) -> &str {
        &self.goods[good].label
    }

    pub fn full_bundle(&self) -> Bundle {
        Bundle::full(self.m())
    }

    /// Relabels the goods through the permutation `pi` (good `g` becomes `pi[g]`);
    /// labels stay attached to positions, so the good set is unchanged.
    pub fn relabel_goods(&self, pi: &[usize]) -> Instance {
        Instance {
            goods: Arc::clone(&self.goods),
            profile: self.profile.iter().map(|r| r.relabel(pi)).collect(),
        }
    }
}

pub fn default_goods(m: usize) -> Vec<Good> {
    (0..m)
        .map(|id| Good {
            id,
            label: format!("g{}", id + 1),
        })
        .collect()
}

/// An assignment of goods to agents. Bundles are pairwise disjoint;
/// the allocation is complete when they cover every good.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Allocation {
    bundles: Vec<Bundle>,
    num_goods: usize,
}

impl Allocation {
    pub fn new(bundles: Vec<Bundle>, num_goods: usize) -> Result<Self, ModelError> {
        let mut seen = Bundle::EMPTY;
        for (i, &b) in bundles.iter().enumerate() {
            if !b.is_subset(Bundle::full(num_goods)) {
                return Err(ModelError::Invalid(format!(
                    "agent {} holds a good outside 0..{num_goods}",
                    i + 1
                )));
            }
            if !seen.is_disjoint(b) {
                return Err(ModelError::Invalid(format!(
                    "agent {}'s bundle overlaps an earlier bundle",
                    i + 1
                )));
            }
            seen = seen.union(b);
        }
        Ok(Allocation { bundles, num_goods })
    }

    pub fn empty(n: usize, num_goods: usize) -> Self {
        Allocation {
            bundles: vec![Bundle::EMPTY; n],
            num_goods,
        }
    }

    pub fn n(&self) -> usize {
        self.bundles.len()
    }

    pub fn num_goods(&self) -> usize {
        self.num_goods
    }

    pub fn bundle(&self, agent: usize) -> Bundle {
        self.bundles[agent]
    }

    pub fn bundles(&self) -> &[Bundle] {
        &self.bundles
    }

    /// Union of all bundles.
    pub fn assigned(&self) -> Bundle {
        self.bundles
            .iter()
            .fold(Bundle::EMPTY, |acc, &b| acc.union(b))
    }

    pub fn is_complete(&self) -> bool {
        self.assigned() == Bundle::full(self.num_goods)
    }

    pub fn owner_of(&self, good: usize) -> Option<usize> {
        self.bundles.iter().position(|b| b.contains(good))
    }

    pub(crate) fn assign(&mut self, good: usize, agent: usize) {
        debug_assert!(
            self.owner_of(good).is_none(),
            "good {good} already assigned"
        );
        self.bundles[agent] = self.bundles[agent].with(good);
    }

    /// Remaps good ids through the relabeling `pi`.
    pub fn relabel_goods(&self, pi: &[usize]) -> Allocation {
        Allocation {
            bundles: self.bundles.iter().map(|b| b.relabel(pi)).collect(),
            num_goods: self.num_goods,
        }
    }
}

/// An ordered list of agent ids; replayed left to right, each entry takes its
/// most preferred remaining good.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PickingSequence(pub Vec<usize>);

impl PickingSequence {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn agents(&self) -> &[usize] {
        &self.0
    }
}

impl fmt::Display for PickingSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|a| (a + 1).to_string()).collect();
        write!(f, "{}", parts.join(","))
    }
}

/// Lexicographic bundle comparison under ranking `r`:
/// `Greater` means `x` is strictly preferred to `y`, `Equal` means `x == y`.
///
/// The comparison is decided by the highest-ranked good in the symmetric
/// difference `x △ y`: `x` wins iff that good lies in `x`.
pub fn lex_compare(r: &Ranking, x: Bundle, y: Bundle) -> Ordering {
    let diff = x.bits() ^ y.bits();
    if diff == 0 {
        return Ordering::Equal;
    }
    for &g in r.order() {
        if diff >> g & 1 == 1 {
            return if x.contains(g) {
                Ordering::Greater
            } else {
                Ordering::Less
            };
        }
    }
    unreachable!("symmetric difference contains an unranked good");
}

/// `true` iff `x` is weakly preferred to `y` under `r`.
pub fn weakly_prefers(r: &Ranking, x: Bundle, y: Bundle) -> bool {
    lex_compare(r, x, y) != Ordering::Less
}

// ---------------------------------------------------------------------------
// Text formats
// ---------------------------------------------------------------------------

/// Parses the line-oriented instance format:
///
/// ```text
/// agents 3
/// goods g1 g2 g3
/// pref 1: g1 > g2 > g3
/// pref 2: g1 > g2 > g3
/// pref 3: g2 > g3 > g1
/// ```
///
/// Whitespace-insensitive; `#` starts a comment line.
pub fn parse_instance(text: &str) -> Result<Instance, ModelError> {
    let mut n: Option<usize> = None;
    let mut goods: Option<Vec<Good>> = None;
    let mut prefs: Vec<Option<Vec<usize>>> = Vec::new();

    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        let lineno = lineno + 1;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |msg: String| ModelError::Parse { line: lineno, msg };
        if let Some(rest) = line.strip_prefix("agents") {
            if n.is_some() {
                return Err(err("duplicate 'agents' line".into()));
            }
            let count: usize = rest
                .trim()
                .parse()
                .map_err(|_| err(format!("cannot parse agent count from '{}'", rest.trim())))?;
            if count == 0 {
                return Err(err("agent count must be at least 1".into()));
            }
            n = Some(count);
            prefs = vec![None; count];
        } else if let Some(rest) = line.strip_prefix("goods") {
            if goods.is_some() {
                return Err(err("duplicate 'goods' line".into()));
            }
            let labels: Vec<&str> = rest.split_whitespace().collect();
            let mut gs = Vec::with_capacity(labels.len());
            for (id, label) in labels.iter().enumerate() {
                gs.push(Good {
                    id,
                    label: label.to_string(),
                });
            }
            goods = Some(gs);
        } else if let Some(rest) = line.strip_prefix("pref") {
            let n = n.ok_or_else(|| err("'pref' before 'agents'".into()))?;
            let goods = goods
                .as_ref()
                .ok_or_else(|| err("'pref' before 'goods'".into()))?;
            let (agent_part, order_part) = rest
                .split_once(':')
                .ok_or_else(|| err("expected 'pref <agent>: ...'".into()))?;
            let agent: usize = agent_part
                .trim()
                .parse()
                .map_err(|_| err(format!("cannot parse agent id '{}'", agent_part.trim())))?;
            if agent == 0 || agent > n {
                return Err(err(format!("agent id {agent} out of range 1..{n}")));
            }
            if prefs[agent - 1].is_some() {
                return Err(err(format!("duplicate entry for agent {agent}")));
            }
            let mut order = Vec::new();
            if !order_part.trim().is_empty() {
                for token in order_part.split('>') {
                    let label = token.trim();
                    if label.is_empty() {
                        return Err(err("empty entry in ranking".into()));
                    }
                    let id = goods
                        .iter()
                        .position(|g| g.label == label)
                        .ok_or_else(|| err(format!("unknown good '{label}'")))?;
                    order.push(id);
                }
            }
            if order.len() != goods.len() {
                return Err(err(format!(
                    "incomplete ranking for agent {agent}: {} of {} goods",
                    order.len(),
                    goods.len()
                )));
            }
            prefs[agent - 1] = Some(order);
        } else {
            return Err(err(format!("unrecognized line '{line}'")));
        }
    }

    let n = n.ok_or(ModelError::Parse {
        line: 0,
        msg: "missing 'agents' line".into(),
    })?;
    let goods = goods.ok_or(ModelError::Parse {
        line: 0,
        msg: "missing 'goods' line".into(),
    })?;
    let mut profile = Vec::with_capacity(n);
    for (i, p) in prefs.into_iter().enumerate() {
        let order = p.ok_or(ModelError::Parse {
            line: 0,
            msg: format!("missing 'pref {}' line", i + 1),
        })?;
        profile.push(Ranking::new(order)?);
    }
    Instance::new(goods, profile)
}

pub fn serialize_instance(inst: &Instance) -> String {
    let mut out = String::new();
    out.push_str(&format!("agents {}\n", inst.n()));
    let labels: Vec<&str> = inst.goods().iter().map(|g| g.label.as_str()).collect();
    out.push_str(&format!("goods {}\n", labels.join(" ")));
    for (i, r) in inst.profile().iter().enumerate() {
        let row: Vec<&str> = r.order().iter().map(|&g| inst.label(g)).collect();
        out.push_str(&format!("pref {}: {}\n", i + 1, row.join(" > ")));
    }
    out
}

/// Parses the allocation format: one `alloc <agent>: <labels...>` line per
/// agent; unlisted goods are unassigned. `#` starts a comment line.
pub fn parse_allocation(inst: &Instance, text: &str) -> Result<Allocation, ModelError> {
    let mut bundles: Vec<Option<Bundle>> = vec![None; inst.n()];
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        let lineno = lineno + 1;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |msg: String| ModelError::Parse { line: lineno, msg };
        let rest = line
            .strip_prefix("alloc")
            .ok_or_else(|| err(format!("unrecognized line '{line}'")))?;
        let (agent_part, goods_part) = rest
            .split_once(':')
            .ok_or_else(|| err("expected 'alloc <agent>: ...'".into()))?;
        let agent: usize = agent_part
            .trim()
            .parse()
            .map_err(|_| err(format!("cannot parse agent id '{}'", agent_part.trim())))?;
        if agent == 0 || agent > inst.n() {
            return Err(err(format!(
                "agent id {agent} out of range 1..{}",
                inst.n()
            )));
        }
        if bundles[agent - 1].is_some() {
            return Err(err(format!("duplicate entry for agent {agent}")));
        }
        let mut b = Bundle::EMPTY;
        for token in goods_part.split_whitespace() {
            let id = inst
                .good_index(token)
                .ok_or_else(|| err(format!("unknown good '{token}'")))?;
            if b.contains(id) {
                return Err(err(format!(
                    "good '{token}' listed twice for agent {agent}"
                )));
            }
            b = b.with(id);
        }
        bundles[agent - 1] = Some(b);
    }
    let bundles: Vec<Bundle> = bundles
        .into_iter()
        .map(|b| b.unwrap_or(Bundle::EMPTY))
        .collect();
    Allocation::new(bundles, inst.m())
}

pub fn serialize_allocation(inst: &Instance, alloc: &Allocation) -> String {
    let mut out = String::new();
    for i in 0..alloc.n() {
        let labels: Vec<&str> = alloc.bundle(i).iter().map(|g| inst.label(g)).collect();
        if labels.is_empty() {
            out.push_str(&format!("alloc {}:\n", i + 1));
        } else {
            out.push_str(&format!("alloc {}: {}\n", i + 1, labels.join(" ")));
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Enumerators
// ---------------------------------------------------------------------------

/// All permutations of `0..m` in lexicographic order.
pub fn permutations(m: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..m).collect();
    loop {
        out.push(cur.clone());
        // next_permutation
        if m < 2 {
            break;
        }
        let Some(i) = (0..m - 1).rev().find(|&i| cur[i] < cur[i + 1]) else {
            break;
        };
        let j = (i + 1..m).rev().find(|&j| cur[j] > cur[i]).unwrap();
        cur.swap(i, j);
        cur[i + 1..].reverse();
    }
    out
}

pub fn factorial(m: usize) -> u128 {
    (1..=m as u128).product()
}

/// `(m!)^n`, or `None` on overflow.
pub fn count_profiles(n: usize, m: usize) -> Option<u128> {
    let f = factorial(m);
    let mut acc: u128 = 1;
    for _ in 0..n {
        acc = acc.checked_mul(f)?;
    }
    Some(acc)
}

/// Streams every profile in `L^n` exactly once, in a fixed order
/// (agent 0's ranking varies slowest). Guarded by [`DEFAULT_PROFILE_CAP`].
pub fn enumerate_profiles(n: usize, m: usize) -> Result<ProfileIter, ModelError> {
    enumerate_profiles_with_cap(n, m, DEFAULT_PROFILE_CAP)
}

pub fn enumerate_profiles_with_cap(
    n: usize,
    m: usize,
    cap: u64,
) -> Result<ProfileIter, ModelError> {
    let total = count_profiles(n, m).unwrap_or(u128::MAX);
    if total > cap as u128 {
        return Err(ModelError::DomainTooLarge { size: total, cap });
    }
    let perms: Vec<Ranking> = permutations(m)
        .into_iter()
        .map(|p| Ranking::new(p).expect("permutation"))
        .collect();
    Ok(ProfileIter {
        goods: default_goods(m).into(),
        perms,
        digits: vec![0; n],
        done: n == 0,
    })
}

pub struct ProfileIter {
    goods: Arc<[Good]>,
    perms: Vec<Ranking>,
    digits: Vec<usize>,
    done: bool,
}

impl Iterator for ProfileIter {
    type Item = Instance;

    fn next(&mut self) -> Option<Instance> {
        if self.done {
            return None;
        }
        let inst = Instance {
            goods: Arc::clone(&self.goods),
            profile: self.digits.iter().map(|&d| self.perms[d].clone()).collect(),
        };
        // increment mixed-radix counter, agent 0 most significant
        let base = self.perms.len();
        let mut i = self.digits.len();
        loop {
            if i == 0 {
                self.done = true;
                break;
            }
            i -= 1;
            self.digits[i] += 1;
            if self.digits[i] < base {
                break;
            }
            self.digits[i] = 0;
        }
        Some(inst)
    }
}

/// Streams allocations of the instance's goods: every complete allocation
/// exactly once, and (unless `complete_only`) every partial allocation too.
/// Guarded by [`DEFAULT_ALLOCATION_CAP`].
pub fn enumerate_allocations(
    inst: &Instance,
    complete_only: bool,
) -> Result<AllocationIter, ModelError> {
    enumerate_allocations_with_cap(inst, complete_only, DEFAULT_ALLOCATION_CAP)
}

pub fn enumerate_allocations_with_cap(
    inst: &Instance,
    complete_only: bool,
    cap: u64,
) -> Result<AllocationIter, ModelError> {
    let n = inst.n();
    let m = inst.m();
    let base = if complete_only { n } else { n + 1 };
    let mut total: u128 = 1;
    for _ in 0..m {
        total = total.saturating_mul(base as u128);
    }
    if total > cap as u128 {
        return Err(ModelError::DomainTooLarge { size: total, cap });
    }
    Ok(AllocationIter {
        n,
        m,
        base,
        digits: vec![0; m],
        done: false,
    })
}

pub struct AllocationIter {
    n: usize,
    m: usize,
    /// `n` for complete-only enumeration; `n + 1` when a good may stay
    /// unassigned (digit `n` means unassigned).
    base: usize,
    digits: Vec<usize>,
    done: bool,
}

impl Iterator for AllocationIter {
    type Item = Allocation;

    fn next(&mut self) -> Option<Allocation> {
        if self.done {
            return None;
        }
        let mut alloc = Allocation::empty(self.n, self.m);
        for (g, &d) in self.digits.iter().enumerate() {
            if d < self.n {
                alloc.assign(g, d);
            }
        }
        let mut i = self.m;
        loop {
            if i == 0 {
                self.done = true;
                break;
            }
            i -= 1;
            self.digits[i] += 1;
            if self.digits[i] < self.base {
                break;
            }
            self.digits[i] = 0;
        }
        Some(alloc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn b(goods: &[usize]) -> Bundle {
        goods.iter().copied().collect()
    }

    /// Literal transcription of the definitional bundle order: `x` beats `y`
    /// iff there is a good `g ∈ x∖y` with `{g' ∈ y : g' ≻ g} ⊆ x`.
    fn lex_compare_literal(r: &Ranking, x: Bundle, y: Bundle) -> Ordering {
        if x == y {
            return Ordering::Equal;
        }
        let beats = |x: Bundle, y: Bundle| -> bool {
            x.difference(y).iter().any(|g| {
                let better_in_y: Bundle = y
                    .iter()
                    .filter(|&gp| r.position(gp) < r.position(g))
                    .collect();
                better_in_y.is_subset(x)
            })
        };
        if beats(x, y) {
            Ordering::Greater
        } else {
            debug_assert!(beats(y, x));
            Ordering::Less
        }
    }

    #[test]
    fn lex_compare_prefers_single_top_good_over_rest() {
        let r = Ranking::identity(3);
        assert_eq!(lex_compare(&r, b(&[0]), b(&[1, 2])), Ordering::Greater);
    }

    #[test]
    fn lex_compare_equal_bundles() {
        let r = Ranking::identity(3);
        assert_eq!(lex_compare(&r, b(&[1]), b(&[1])), Ordering::Equal);
    }

    #[test]
    fn lex_compare_empty_loses_to_anything() {
        let r = Ranking::identity(3);
        assert_eq!(lex_compare(&r, Bundle::EMPTY, b(&[2])), Ordering::Less);
    }

    #[test]
    fn lex_compare_agrees_with_literal_definition_exhaustively() {
        for m in 0..=4 {
            for order in permutations(m) {
                let r = Ranking::new(order).unwrap();
                for xb in 0..(1u128 << m) {
                    for yb in 0..(1u128 << m) {
                        let x = Bundle::from_bits(xb);
                        let y = Bundle::from_bits(yb);
                        assert_eq!(lex_compare(&r, x, y), lex_compare_literal(&r, x, y));
                    }
                }
            }
        }
    }

    #[test]
    fn lex_compare_is_a_strict_total_order() {
        for m in 0..=4 {
            let r = Ranking::identity(m);
            let all: Vec<Bundle> = (0..(1u128 << m)).map(Bundle::from_bits).collect();
            for &x in &all {
                for &y in &all {
                    let xy = lex_compare(&r, x, y);
                    let yx = lex_compare(&r, y, x);
                    assert_eq!(xy, yx.reverse());
                    assert_eq!(xy == Ordering::Equal, x == y);
                    for &z in &all {
                        if xy == Ordering::Greater && lex_compare(&r, y, z) == Ordering::Greater {
                            assert_eq!(lex_compare(&r, x, z), Ordering::Greater);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn more_goods_is_strictly_better() {
        for m in 0..=4 {
            let r = Ranking::identity(m);
            for xb in 0..(1u128 << m) {
                let x = Bundle::from_bits(xb);
                for g in 0..m {
                    if !x.contains(g) {
                        assert_eq!(lex_compare(&r, x.with(g), x), Ordering::Greater);
                    }
                }
            }
        }
    }

    #[test]
    fn rank_of_examples() {
        let r = Ranking::identity(3);
        assert_eq!(r.rank_of(0), 1);
        assert_eq!(r.rank_of(2), 3);
        // agent 3 of the shared-top fixture: g2 ≻ g3 ≻ g1
        let r = Ranking::new(vec![1, 2, 0]).unwrap();
        assert_eq!(r.rank_of(2), 2);
    }

    #[test]
    fn parse_minimal_document() {
        let text = "agents 2\ngoods a b\npref 1: a > b\npref 2: a > b\n";
        let inst = parse_instance(text).unwrap();
        assert_eq!(inst.n(), 2);
        assert_eq!(inst.m(), 2);
        assert_eq!(inst.ranking(0).order(), &[0, 1]);
    }

    #[test]
    fn parse_rejects_incomplete_ranking() {
        let text = "agents 2\ngoods a b c\npref 1: a > b > c\npref 2: a > b\n";
        let err = parse_instance(text).unwrap_err();
        assert!(err.to_string().contains("incomplete ranking"));
    }

    #[test]
    fn parse_rejects_duplicate_agent_entry() {
        let text = "agents 2\ngoods a b\npref 1: a > b\npref 1: b > a\npref 2: a > b\n";
        let err = parse_instance(text).unwrap_err();
        assert!(err.to_string().contains("duplicate"));
    }

    #[test]
    fn parse_rejects_repeated_good_in_ranking() {
        let text = "agents 1\ngoods a b\npref 1: a > a\n";
        assert!(parse_instance(text).is_err());
    }

    #[test]
    fn shared_top_fixture_round_trips() {
        let inst = crate::fixtures::efk_rm_infeasible(1);
        let text = serialize_instance(&inst);
        let back = parse_instance(&text).unwrap();
        assert_eq!(inst, back);
    }

    #[test]
    fn allocation_round_trip_and_unassigned_goods() {
        let inst = crate::fixtures::efk_rm_infeasible(1);
        let text = "alloc 1: g1\nalloc 2:\nalloc 3: g2 g3\n";
        let alloc = parse_allocation(&inst, text).unwrap();
        assert_eq!(alloc.bundle(0), b(&[0]));
        assert!(alloc.bundle(1).is_empty());
        assert!(alloc.is_complete());
        assert_eq!(serialize_allocation(&inst, &alloc), text);

        let partial = parse_allocation(&inst, "alloc 1: g1\n").unwrap();
        assert!(!partial.is_complete());
        assert_eq!(partial.owner_of(1), None);
    }

    #[test]
    fn allocation_rejects_overlap() {
        let inst = crate::fixtures::efk_rm_infeasible(1);
        assert!(parse_allocation(&inst, "alloc 1: g1\nalloc 2: g1\n").is_err());
    }

    #[test]
    fn profile_enumeration_counts() {
        assert_eq!(enumerate_profiles(1, 2).unwrap().count(), 2);
        assert_eq!(enumerate_profiles(2, 2).unwrap().count(), 4);
        assert_eq!(enumerate_profiles(2, 3).unwrap().count(), 36);
    }

    #[test]
    fn profile_enumeration_is_deterministic_and_guarded() {
        let first = enumerate_profiles(2, 3).unwrap().next().unwrap();
        assert_eq!(first.ranking(0).order(), &[0, 1, 2]);
        assert_eq!(first.ranking(1).order(), &[0, 1, 2]);
        assert!(matches!(
            enumerate_profiles_with_cap(3, 5, 1000),
            Err(ModelError::DomainTooLarge { .. })
        ));
    }

    #[test]
    fn allocation_enumeration_counts() {
        let i22 = Instance::identical(2, vec![0, 1]).unwrap();
        assert_eq!(enumerate_allocations(&i22, true).unwrap().count(), 4);
        let i32 = Instance::identical(3, vec![0, 1]).unwrap();
        assert_eq!(enumerate_allocations(&i32, true).unwrap().count(), 9);
        let i23 = Instance::identical(2, vec![0, 1, 2]).unwrap();
        assert_eq!(enumerate_allocations(&i23, true).unwrap().count(), 8);
        // with partial allocations: (n+1)^m
        assert_eq!(enumerate_allocations(&i22, false).unwrap().count(), 9);
        assert!(enumerate_allocations(&i22, true)
            .unwrap()
            .all(|a| a.is_complete()));
    }

    proptest! {
        #[test]
        fn serialize_parse_identity(n in 1usize..5, m in 0usize..7, seed in any::<u64>()) {
            use rand::prelude::*;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut orders = Vec::new();
            for _ in 0..n {
                let mut o: Vec<usize> = (0..m).collect();
                o.shuffle(&mut rng);
                orders.push(o);
            }
            let inst = Instance::from_orders(orders).unwrap();
            let back = parse_instance(&serialize_instance(&inst)).unwrap();
            prop_assert_eq!(inst, back);
        }

        #[test]
        fn lex_compare_transitive_on_random_bundles(
            m in 1usize..40,
            xb in any::<u128>(),
            yb in any::<u128>(),
            zb in any::<u128>(),
        ) {
            let full = Bundle::full(m).bits();
            let r = Ranking::identity(m);
            let (x, y, z) = (Bundle::from_bits(xb & full), Bundle::from_bits(yb & full), Bundle::from_bits(zb & full));
            if lex_compare(&r, x, y) != Ordering::Less && lex_compare(&r, y, z) != Ordering::Less {
                prop_assert_ne!(lex_compare(&r, x, z), Ordering::Less);
            }
        }
    }
}
