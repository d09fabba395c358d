//! Exact counting and sampling of sequences `y` constrained jointly with a fixed `x`.
//!
//! A joint type of `(x, y)` is a table `N(a, b)` whose row sums are the letter
//! counts of `x`. The number of `y` with a given table is
//! `prod_a n_a! / prod_{a,b} N(a, b)!`. Sets defined by box constraints on the
//! cells and on the column sums are handled by a dynamic program over rows whose
//! state is the vector of partial column sums.

use rand::Rng;

use super::pmf::{JointPmf, Pmf};
use super::typical::{log_sum_exp, sample_log_weights, LnFactorial, Typicality};
use crate::error::{Error, Result};

/// Default bound on dynamic-program states and enumerated tables.
pub const ENUMERATION_CAP: u128 = 1 << 24;

#[derive(Debug, Clone)]
struct RowChoice {
    cells: Vec<usize>,
    log_w: f64,
}

/// The set `{y : joint type of (x, y) in cell ranges, counts of y in column ranges}`
/// for a fixed `x`, with each `y` weighted by `prod_i w(y_i)`.
#[derive(Debug, Clone)]
pub struct ConditionalSet {
    row_counts: Vec<usize>,
    radix: Vec<usize>,
    col_ranges: Vec<(usize, usize)>,
    rows: Vec<Vec<RowChoice>>,
    // forward[r][state]: ln total weight of rows < r ending in `state`
    forward: Vec<Vec<f64>>,
    log_total: f64,
}

impl ConditionalSet {
    /// Sequences jointly typical with `x` under `joint` (axes `[x, y]`) whose own
    /// counts are typical for the `y` marginal, counted with unit weight.
    pub fn jointly_typical(x_counts: &[usize], joint: &JointPmf, rule: Typicality) -> Result<Self> {
        let ny = joint.dims()[1];
        Self::jointly_typical_weighted(x_counts, joint, rule, &vec![0.0; ny])
    }

    /// As [`ConditionalSet::jointly_typical`], each `y` weighted by `prod_i w(y_i)`
    /// with `log_w` the natural logs of `w`.
    pub fn jointly_typical_weighted(
        x_counts: &[usize],
        joint: &JointPmf,
        rule: Typicality,
        log_w: &[f64],
    ) -> Result<Self> {
        if joint.rank() != 2 || joint.dims()[0] != x_counts.len() || joint.dims()[1] != log_w.len() {
            return Err(Error::Dimension("conditional set shapes disagree".into()));
        }
        let n: usize = x_counts.iter().sum();
        let ny = joint.dims()[1];
        let cell_ranges: Vec<Vec<(usize, usize)>> = (0..x_counts.len())
            .map(|a| rule.count_ranges(&joint.probs()[a * ny..(a + 1) * ny], n))
            .collect();
        let y_marg = joint.marginal(&[1])?;
        let col_ranges = rule.count_ranges(y_marg.probs(), n);
        Self::new(x_counts, &cell_ranges, &col_ranges, log_w, ENUMERATION_CAP)
    }

    pub fn new(
        row_counts: &[usize],
        cell_ranges: &[Vec<(usize, usize)>],
        col_ranges: &[(usize, usize)],
        log_w: &[f64],
        cap: u128,
    ) -> Result<Self> {
        let ncols = col_ranges.len();
        if ncols == 0 || cell_ranges.len() != row_counts.len() || log_w.len() != ncols {
            return Err(Error::Dimension("conditional set shapes disagree".into()));
        }
        if cell_ranges.iter().any(|r| r.len() != ncols) {
            return Err(Error::Dimension("cell ranges are ragged".into()));
        }
        let n: usize = row_counts.iter().sum();
        let lnf = LnFactorial::new(n);
        // partial sums of the first ncols - 1 columns; the last is implied
        let radix: Vec<usize> = col_ranges[..ncols - 1]
            .iter()
            .map(|(_, hi)| hi.min(&n) + 1)
            .collect();
        let states: u128 = radix.iter().map(|r| *r as u128).product();
        if states > cap {
            return Err(Error::EnumerationCap {
                what: "conditional typical set states".into(),
                needed: states,
                cap,
            });
        }
        let mut rows = Vec::with_capacity(row_counts.len());
        let mut total_choices: u128 = 0;
        for (a, &na) in row_counts.iter().enumerate() {
            let mut choices = Vec::new();
            let mut cells = vec![0; ncols];
            enumerate_row(na, &cell_ranges[a], 0, &mut cells, &mut |c| {
                let mut lw = lnf.get(na);
                for (b, v) in c.iter().enumerate() {
                    if *v > 0 {
                        if log_w[b] == f64::NEG_INFINITY {
                            return;
                        }
                        lw += *v as f64 * log_w[b] - lnf.get(*v);
                    }
                }
                choices.push(RowChoice {
                    cells: c.to_vec(),
                    log_w: lw,
                });
            });
            total_choices += choices.len() as u128;
            if total_choices.saturating_mul(states) > cap.saturating_mul(64) {
                return Err(Error::EnumerationCap {
                    what: "conditional typical set transitions".into(),
                    needed: total_choices.saturating_mul(states),
                    cap: cap.saturating_mul(64),
                });
            }
            rows.push(choices);
        }

        let nstates = states as usize;
        let mut forward = Vec::with_capacity(rows.len() + 1);
        let mut cur = vec![f64::NEG_INFINITY; nstates];
        cur[0] = 0.0;
        for choices in &rows {
            let mut next = vec![f64::NEG_INFINITY; nstates];
            for (s, v) in cur.iter().enumerate() {
                if *v == f64::NEG_INFINITY {
                    continue;
                }
                for ch in choices {
                    if let Some(t) = step(s, &ch.cells, &radix) {
                        next[t] = lse2(next[t], v + ch.log_w);
                    }
                }
            }
            forward.push(cur);
            cur = next;
        }
        forward.push(cur);

        let mut set = Self {
            row_counts: row_counts.to_vec(),
            radix,
            col_ranges: col_ranges.to_vec(),
            rows,
            forward,
            log_total: f64::NEG_INFINITY,
        };
        let last = set.forward.last().expect("nonempty");
        set.log_total = log_sum_exp(
            last.iter()
                .enumerate()
                .filter(|(s, _)| set.final_ok(*s))
                .map(|(_, v)| *v),
        );
        Ok(set)
    }

    /// Natural log of the total weight of the set.
    pub fn log_total(&self) -> f64 {
        self.log_total
    }

    pub fn is_empty(&self) -> bool {
        self.log_total == f64::NEG_INFINITY
    }

    fn final_ok(&self, s: usize) -> bool {
        let n: usize = self.row_counts.iter().sum();
        let sums = decode(s, &self.radix);
        let used: usize = sums.iter().sum();
        if used > n {
            return false;
        }
        let last = n - used;
        sums.iter()
            .chain(std::iter::once(&last))
            .zip(&self.col_ranges)
            .all(|(v, (lo, hi))| lo <= v && v <= hi)
    }

    /// Draws a joint-type table with probability proportional to its total weight.
    pub fn sample_table<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<Vec<usize>>> {
        if self.is_empty() {
            return Err(Error::Infeasible("conditional typical set is empty".into()));
        }
        let last = self.forward.last().expect("nonempty");
        let finals: Vec<usize> = (0..last.len()).filter(|s| self.final_ok(*s)).collect();
        let logw: Vec<f64> = finals.iter().map(|s| last[*s]).collect();
        let mut state = finals[sample_log_weights(&logw, rng)];
        let mut table = vec![Vec::new(); self.rows.len()];
        for r in (0..self.rows.len()).rev() {
            let mut cands = Vec::new();
            let mut logw = Vec::new();
            for (i, ch) in self.rows[r].iter().enumerate() {
                if let Some(prev) = unstep(state, &ch.cells, &self.radix) {
                    let f = self.forward[r][prev];
                    if f > f64::NEG_INFINITY {
                        cands.push((i, prev));
                        logw.push(f + ch.log_w);
                    }
                }
            }
            let (i, prev) = cands[sample_log_weights(&logw, rng)];
            table[r] = self.rows[r][i].cells.clone();
            state = prev;
        }
        Ok(table)
    }

    /// Draws `y` with probability proportional to its weight, aligned with `x`.
    pub fn sample_sequence<R: Rng + ?Sized>(&self, x: &[usize], rng: &mut R) -> Result<Vec<usize>> {
        let table = self.sample_table(rng)?;
        Ok(fill_from_table(x, &table, rng))
    }
}

/// Places letters so that the joint counts of `(x, y)` equal `table`, uniformly
/// among all such `y`.
pub fn fill_from_table<R: Rng + ?Sized>(
    x: &[usize],
    table: &[Vec<usize>],
    rng: &mut R,
) -> Vec<usize> {
    let mut per_row: Vec<Vec<usize>> = table
        .iter()
        .map(|row| super::typical::arrange(row, rng))
        .collect();
    let mut y = vec![0; x.len()];
    for (i, a) in x.iter().enumerate().rev() {
        y[i] = per_row[*a].pop().expect("row counts match x");
    }
    y
}

fn enumerate_row(
    left: usize,
    ranges: &[(usize, usize)],
    b: usize,
    cells: &mut Vec<usize>,
    emit: &mut dyn FnMut(&[usize]),
) {
    let ncols = ranges.len();
    if b == ncols - 1 {
        let (lo, hi) = ranges[b];
        if lo <= left && left <= hi {
            cells[b] = left;
            emit(cells);
        }
        return;
    }
    let (lo, hi) = ranges[b];
    // remaining columns must be able to absorb what is left
    let rest_lo: usize = ranges[b + 1..].iter().map(|r| r.0).sum();
    let rest_hi: usize = ranges[b + 1..].iter().map(|r| r.1).sum();
    for v in lo..=hi.min(left) {
        let rem = left - v;
        if rem < rest_lo || rem > rest_hi {
            continue;
        }
        cells[b] = v;
        enumerate_row(rem, ranges, b + 1, cells, emit);
    }
}

fn decode(mut s: usize, radix: &[usize]) -> Vec<usize> {
    let mut out = vec![0; radix.len()];
    for (slot, r) in out.iter_mut().zip(radix) {
        *slot = s % r;
        s /= r;
    }
    out
}

fn step(s: usize, cells: &[usize], radix: &[usize]) -> Option<usize> {
    let mut out = 0;
    let mut mul = 1;
    let mut rest = s;
    for (b, r) in radix.iter().enumerate() {
        let v = rest % r + cells[b];
        rest /= r;
        if v >= *r {
            return None;
        }
        out += v * mul;
        mul *= r;
    }
    Some(out)
}

fn unstep(s: usize, cells: &[usize], radix: &[usize]) -> Option<usize> {
    let mut out = 0;
    let mut mul = 1;
    let mut rest = s;
    for (b, r) in radix.iter().enumerate() {
        let v = rest % r;
        rest /= r;
        if v < cells[b] {
            return None;
        }
        out += (v - cells[b]) * mul;
        mul *= r;
    }
    Some(out)
}

fn lse2(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// Visits every table with the given row sums whose cells lie in `cell_ranges`,
/// stopping with an error once `cap` tables have been produced.
pub fn for_each_table(
    row_counts: &[usize],
    cell_ranges: &[Vec<(usize, usize)>],
    cap: u128,
    mut visit: impl FnMut(&[Vec<usize>]),
) -> Result<u128> {
    let per_row: Vec<Vec<Vec<usize>>> = row_counts
        .iter()
        .zip(cell_ranges)
        .map(|(na, ranges)| {
            let mut out = Vec::new();
            let mut cells = vec![0; ranges.len()];
            enumerate_row(*na, ranges, 0, &mut cells, &mut |c| out.push(c.to_vec()));
            out
        })
        .collect();
    let needed: u128 = per_row
        .iter()
        .map(|r| r.len() as u128)
        .fold(1u128, |a, b| a.saturating_mul(b));
    if needed > cap {
        return Err(Error::EnumerationCap {
            what: "joint type tables".into(),
            needed,
            cap,
        });
    }
    if per_row.iter().any(Vec::is_empty) {
        return Ok(0);
    }
    let mut idx = vec![0; per_row.len()];
    let mut table: Vec<Vec<usize>> = per_row.iter().map(|r| r[0].clone()).collect();
    let mut count = 0;
    loop {
        visit(&table);
        count += 1;
        let mut r = 0;
        loop {
            if r == per_row.len() {
                return Ok(count);
            }
            idx[r] += 1;
            if idx[r] < per_row[r].len() {
                table[r].clone_from(&per_row[r][idx[r]]);
                break;
            }
            idx[r] = 0;
            table[r].clone_from(&per_row[r][0]);
            r += 1;
        }
    }
}

/// Natural log of the probability that an i.i.d. `Y ~ w` sequence, paired with a fixed
/// `x` having row counts `row_counts`, produces exactly `table`.
pub fn log_table_probability(table: &[Vec<usize>], w: &Pmf, lnf: &LnFactorial) -> f64 {
    let mut lw = 0.0;
    for row in table {
        let na: usize = row.iter().sum();
        lw += lnf.get(na);
        for (b, c) in row.iter().enumerate() {
            if *c > 0 {
                let p = w.prob(b);
                if p <= 0.0 {
                    return f64::NEG_INFINITY;
                }
                lw += *c as f64 * p.ln() - lnf.get(*c);
            }
        }
    }
    lw
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::rng::SeededRng;
    use crate::prob::typical::{counts, is_jointly_typical, is_typical, TypeClassSet};

    fn all_sequences(n: usize, q: usize) -> Vec<Vec<usize>> {
        (0..q.pow(n as u32))
            .map(|mut k| {
                (0..n)
                    .map(|_| {
                        let d = k % q;
                        k /= q;
                        d
                    })
                    .collect()
            })
            .collect()
    }

    #[test]
    fn counts_match_brute_force() {
        let joint = JointPmf::new(vec![2, 3], vec![0.3, 0.1, 0.1, 0.1, 0.2, 0.2]).unwrap();
        let y_marg = joint.marginal_axis(1).unwrap();
        let rule = Typicality::Absolute(0.12);
        let x = vec![0, 1, 0, 1, 1, 0, 0, 1, 1, 0];
        let set = ConditionalSet::jointly_typical(&counts(&x, 2), &joint, rule).unwrap();
        let brute = all_sequences(x.len(), 3)
            .into_iter()
            .filter(|y| is_jointly_typical(&x, y, &joint, rule) && is_typical(y, &y_marg, rule))
            .count();
        assert!(brute > 0);
        assert!((set.log_total() - (brute as f64).ln()).abs() < 1e-9);

        // weighted: total i.i.d. probability
        let w = Pmf::new(vec![0.5, 0.2, 0.3]).unwrap();
        let lw: Vec<f64> = w.probs().iter().map(|p| p.ln()).collect();
        let wset = ConditionalSet::jointly_typical_weighted(&counts(&x, 2), &joint, rule, &lw).unwrap();
        let brute_p: f64 = all_sequences(x.len(), 3)
            .into_iter()
            .filter(|y| is_jointly_typical(&x, y, &joint, rule) && is_typical(y, &y_marg, rule))
            .map(|y| y.iter().map(|b| w.prob(*b)).product::<f64>())
            .sum();
        assert!((wset.log_total().exp() - brute_p).abs() < 1e-12);
    }

    #[test]
    fn samples_are_uniform_members() {
        let joint = JointPmf::new(vec![2, 2], vec![0.45, 0.05, 0.05, 0.45]).unwrap();
        let rule = Typicality::Absolute(0.1);
        let y_marg = joint.marginal_axis(1).unwrap();
        let x = vec![0, 0, 1, 1, 0, 1];
        let set = ConditionalSet::jointly_typical(&counts(&x, 2), &joint, rule).unwrap();
        let members: Vec<Vec<usize>> = all_sequences(x.len(), 2)
            .into_iter()
            .filter(|y| is_jointly_typical(&x, y, &joint, rule) && is_typical(y, &y_marg, rule))
            .collect();
        let mut r = SeededRng::new(9).generator();
        let mut hits = std::collections::HashMap::new();
        let trials = 20_000;
        for _ in 0..trials {
            let y = set.sample_sequence(&x, &mut r).unwrap();
            assert!(members.contains(&y));
            *hits.entry(y).or_insert(0usize) += 1;
        }
        assert_eq!(hits.len(), members.len());
        let expect = trials as f64 / members.len() as f64;
        for v in hits.values() {
            assert!((*v as f64 - expect).abs() < 5.0 * expect.sqrt(), "{v} vs {expect}");
        }
    }

    #[test]
    fn single_row_agrees_with_type_class_set() {
        let p = Pmf::new(vec![0.2, 0.5, 0.3]).unwrap();
        let rule = Typicality::Absolute(0.05);
        let n = 120;
        let joint = JointPmf::new(vec![1, 3], p.probs().to_vec()).unwrap();
        let set = ConditionalSet::jointly_typical(&[n], &joint, rule).unwrap();
        let direct = TypeClassSet::typical(&p, n, rule).unwrap();
        assert!((set.log_total() - direct.log_size()).abs() < 1e-9);
    }

    #[test]
    fn table_enumeration_sums_to_one() {
        let w = Pmf::new(vec![0.3, 0.7]).unwrap();
        let rows = [5usize, 7];
        let full = vec![vec![(0, 5), (0, 5)], vec![(0, 7), (0, 7)]];
        let lnf = LnFactorial::new(12);
        let mut total = 0.0;
        let n = for_each_table(&rows, &full, 1 << 20, |t| {
            total += log_table_probability(t, &w, &lnf).exp();
        })
        .unwrap();
        assert_eq!(n, 6 * 8);
        assert!((total - 1.0).abs() < 1e-12);
        assert!(for_each_table(&rows, &full, 10, |_| {}).is_err());
    }
}
