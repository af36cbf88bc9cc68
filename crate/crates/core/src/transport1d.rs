//! One-dimensional optimal transport as a monotone lookup table.

use std::cmp::Ordering;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};

/// Weighted scalar sample with weights normalized to one.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarSample {
    values: Vec<f64>,
    weights: Vec<f64>,
    uniform: bool,
}

impl ScalarSample {
    pub fn uniform(values: Vec<f64>) -> Result<Self> {
        Self::check_values(&values)?;
        let n = values.len();
        Ok(Self {
            values,
            weights: vec![1.0 / n as f64; n],
            uniform: true,
        })
    }

    pub fn weighted(values: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        Self::check_values(&values)?;
        if weights.len() != values.len() {
            return Err(Error::DimensionMismatch {
                expected: values.len(),
                actual: weights.len(),
            });
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidParameter(
                "weights must be finite and nonnegative".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::InvalidParameter("total weight is zero".into()));
        }
        let n = values.len();
        let uniform = weights.iter().all(|&w| w == weights[0]);
        let weights = if uniform {
            vec![1.0 / n as f64; n]
        } else {
            weights.iter().map(|w| w / total).collect()
        };
        Ok(Self {
            values,
            weights,
            uniform,
        })
    }

    fn check_values(values: &[f64]) -> Result<()> {
        if values.is_empty() {
            return Err(Error::InvalidSample("empty scalar sample".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidSample("non-finite scalar value".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn is_uniform(&self) -> bool {
        self.uniform
    }
}

/// Behavior of [`Map1D::apply`] outside the knot range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Extrapolation {
    #[default]
    Clamp,
    Linear,
}

impl Extrapolation {
    pub fn as_str(self) -> &'static str {
        match self {
            Extrapolation::Clamp => "clamp",
            Extrapolation::Linear => "linear",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "clamp" => Ok(Extrapolation::Clamp),
            "linear" => Ok(Extrapolation::Linear),
            other => Err(Error::InvalidParameter(format!(
                "unknown extrapolation '{other}'"
            ))),
        }
    }
}

/// Monotone piecewise-linear map through `(source_knots[i], target_knots[i])`.
#[derive(Debug, Clone, PartialEq)]
pub struct Map1D {
    source_knots: Vec<f64>,
    target_knots: Vec<f64>,
    extrapolation: Extrapolation,
}

impl Map1D {
    /// Validates strictly ascending sources and non-decreasing targets.
    pub fn from_knots(
        source_knots: Vec<f64>,
        target_knots: Vec<f64>,
        extrapolation: Extrapolation,
    ) -> Result<Self> {
        if source_knots.is_empty() || source_knots.len() != target_knots.len() {
            return Err(Error::InvalidParameter(format!(
                "knot vectors must be nonempty and equal length ({} vs {})",
                source_knots.len(),
                target_knots.len()
            )));
        }
        if source_knots
            .iter()
            .chain(target_knots.iter())
            .any(|v| !v.is_finite())
        {
            return Err(Error::InvalidParameter("non-finite knot".into()));
        }
        if source_knots.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter(
                "source knots must be strictly ascending".into(),
            ));
        }
        if target_knots.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidParameter(
                "target knots must be non-decreasing".into(),
            ));
        }
        Ok(Self {
            source_knots,
            target_knots,
            extrapolation,
        })
    }

    pub fn identity_on(knots: &[f64]) -> Result<Self> {
        let mut k = knots.to_vec();
        k.sort_by(f64::total_cmp);
        k.dedup();
        Self::from_knots(k.clone(), k, Extrapolation::Clamp)
    }

    pub fn source_knots(&self) -> &[f64] {
        &self.source_knots
    }

    pub fn target_knots(&self) -> &[f64] {
        &self.target_knots
    }

    pub fn extrapolation(&self) -> Extrapolation {
        self.extrapolation
    }

    pub fn with_extrapolation(mut self, extrapolation: Extrapolation) -> Self {
        self.extrapolation = extrapolation;
        self
    }

    pub fn len(&self) -> usize {
        self.source_knots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.source_knots.is_empty()
    }

    /// Evaluate the map at `t`. Knot values are returned exactly.
    pub fn apply(&self, t: f64) -> f64 {
        let s = &self.source_knots;
        let g = &self.target_knots;
        let last = s.len() - 1;
        let idx = s.partition_point(|&k| k < t);
        if idx <= last && s[idx] == t {
            return g[idx];
        }
        if idx == 0 {
            return match self.extrapolation {
                Extrapolation::Clamp => g[0],
                Extrapolation::Linear if last > 0 => g[0] + slope(s, g, 0) * (t - s[0]),
                Extrapolation::Linear => g[0] + (t - s[0]),
            };
        }
        if idx > last {
            return match self.extrapolation {
                Extrapolation::Clamp => g[last],
                Extrapolation::Linear if last > 0 => {
                    g[last] + slope(s, g, last - 1) * (t - s[last])
                }
                Extrapolation::Linear => g[last] + (t - s[last]),
            };
        }
        interpolate(s[idx - 1], s[idx], g[idx - 1], g[idx], t)
    }

    pub fn apply_all(&self, ts: &[f64]) -> Vec<f64> {
        ts.iter().map(|&t| self.apply(t)).collect()
    }

    /// `(Σ wᵢ |φ(uᵢ) - uᵢ|^p)^{1/p}` over a weighted scalar sample.
    pub fn induced_cost(&self, u: &ScalarSample, p: f64) -> f64 {
        let total: f64 = u
            .values()
            .iter()
            .zip(u.weights())
            .map(|(&t, &w)| w * (self.apply(t) - t).abs().powf(p))
            .sum();
        total.powf(1.0 / p)
    }

    /// Two-column CSV preceded by a `# extrapolation=<mode>` line.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "# extrapolation={}", self.extrapolation.as_str())?;
        writeln!(out, "source_knot,target_knot")?;
        for (s, t) in self.source_knots.iter().zip(&self.target_knots) {
            writeln!(out, "{s},{t}")?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(reader: R) -> Result<Self> {
        let mut lines = reader.lines();
        let first = lines
            .next()
            .ok_or_else(|| Error::Csv("empty map file".into()))?
            .map_err(|e| Error::Csv(e.to_string()))?;
        let mode = first
            .trim()
            .strip_prefix("# extrapolation=")
            .ok_or_else(|| Error::Csv(format!("bad map header '{first}'")))?;
        let extrapolation = Extrapolation::parse(mode)?;
        let rest: Vec<String> = lines
            .collect::<std::io::Result<_>>()
            .map_err(|e| Error::Csv(e.to_string()))?;
        let body = rest.join("\n");
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(body.as_bytes());
        let mut source = Vec::new();
        let mut target = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let parse = |i: usize| -> Result<f64> {
                rec.get(i)
                    .and_then(|v| v.trim().parse().ok())
                    .ok_or_else(|| Error::Csv(format!("bad knot row {:?}", rec)))
            };
            source.push(parse(0)?);
            target.push(parse(1)?);
        }
        Self::from_knots(source, target, extrapolation)
    }
}

fn slope(s: &[f64], g: &[f64], i: usize) -> f64 {
    (g[i + 1] - g[i]) / (s[i + 1] - s[i])
}

fn interpolate(s0: f64, s1: f64, g0: f64, g1: f64, t: f64) -> f64 {
    let frac = (t - s0) / (s1 - s0);
    (g0 + frac * (g1 - g0)).clamp(g0, g1)
}

/// Indices sorting `values` ascending, stable.
pub(crate) fn argsort(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    idx
}

/// Collapse runs of equal sources, averaging their targets.
fn merge_ties(pairs: Vec<(f64, f64)>) -> (Vec<f64>, Vec<f64>) {
    let mut source = Vec::with_capacity(pairs.len());
    let mut target = Vec::with_capacity(pairs.len());
    let mut i = 0;
    while i < pairs.len() {
        let mut j = i + 1;
        let mut acc = pairs[i].1;
        while j < pairs.len() && pairs[j].0 == pairs[i].0 {
            acc += pairs[j].1;
            j += 1;
        }
        source.push(pairs[i].0);
        target.push(acc / (j - i) as f64);
        i = j;
    }
    // averaging can break monotonicity by one ulp
    for k in 1..target.len() {
        if target[k] < target[k - 1] {
            target[k] = target[k - 1];
        }
    }
    (source, target)
}

/// Piecewise-linear quantile function through `(level, value)` knots,
/// constant outside the level range.
struct QuantileFn {
    levels: Vec<f64>,
    values: Vec<f64>,
}

impl QuantileFn {
    /// Sorted values with left-continuous cumulative weights; equal values are
    /// merged so levels are strictly increasing.
    fn new(sample: &ScalarSample) -> Self {
        let order = argsort(sample.values());
        let mut levels: Vec<f64> = Vec::with_capacity(order.len());
        let mut values: Vec<f64> = Vec::with_capacity(order.len());
        let mut cum = 0.0;
        for &i in &order {
            cum += sample.weights()[i];
            let v = sample.values()[i];
            if values.last() == Some(&v) {
                *levels.last_mut().unwrap() = cum;
            } else if sample.weights()[i] > 0.0 || values.is_empty() {
                levels.push(cum);
                values.push(v);
            } else {
                // zero-weight point: carries no mass, contributes no knot
            }
        }
        // pin the top level against round-off
        if let Some(l) = levels.last_mut() {
            *l = 1.0;
        }
        // drop knots whose level did not advance (zero mass after merging)
        let mut lv = Vec::with_capacity(levels.len());
        let mut vv = Vec::with_capacity(values.len());
        for (l, v) in levels.into_iter().zip(values) {
            if lv.last().is_some_and(|&prev: &f64| l <= prev) {
                *vv.last_mut().unwrap() = v;
                continue;
            }
            lv.push(l);
            vv.push(v);
        }
        Self {
            levels: lv,
            values: vv,
        }
    }

    fn eval(&self, level: f64) -> f64 {
        let idx = self.levels.partition_point(|&l| l < level);
        if idx == 0 {
            return self.values[0];
        }
        if idx >= self.levels.len() {
            return *self.values.last().unwrap();
        }
        if self.levels[idx] == level {
            return self.values[idx];
        }
        interpolate(
            self.levels[idx - 1],
            self.levels[idx],
            self.values[idx - 1],
            self.values[idx],
            level,
        )
    }
}

/// Fit the optimal monotone map sending `u` onto `v`.
///
/// Equal sizes with uniform weights use the exact sorted pairing. Otherwise
/// both weighted quantile functions are built from sorted values and
/// cumulative weights, and knots are placed at the merged cumulative-weight
/// breakpoints inside the source range: the source knot is the `u`-quantile
/// and the target the `v`-quantile at that level, each linearly
/// interpolated between order statistics.
pub fn fit_1d_map(u: &ScalarSample, v: &ScalarSample) -> Result<Map1D> {
    if u.is_empty() || v.is_empty() {
        return Err(Error::InvalidSample("empty scalar sample".into()));
    }
    if u.len() == v.len() && u.is_uniform() && v.is_uniform() {
        return fit_sorted(u.values(), v.values());
    }
    fit_quantile(u, v)
}

fn fit_sorted(u: &[f64], v: &[f64]) -> Result<Map1D> {
    let order = argsort(u);
    let mut sorted_v = v.to_vec();
    sorted_v.sort_by(f64::total_cmp);
    let pairs: Vec<(f64, f64)> = order
        .iter()
        .zip(sorted_v)
        .map(|(&i, t)| (u[i], t))
        .collect();
    let (source, target) = merge_ties(pairs);
    Map1D::from_knots(source, target, Extrapolation::Clamp)
}

fn fit_quantile(u: &ScalarSample, v: &ScalarSample) -> Result<Map1D> {
    let qu = QuantileFn::new(u);
    let qv = QuantileFn::new(v);
    let first = qu.levels[0];
    // (level, is_source_knot)
    let mut levels: Vec<(f64, bool)> = qu.levels.iter().map(|&l| (l, true)).collect();
    levels.extend(
        qv.levels
            .iter()
            .filter(|&&l| l > first)
            .map(|&l| (l, false)),
    );
    levels.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.cmp(&a.1)));
    levels.dedup_by(|later, earlier| later.0 == earlier.0);

    let mut source: Vec<f64> = Vec::with_capacity(levels.len());
    let mut target: Vec<f64> = Vec::with_capacity(levels.len());
    let mut from_source: Vec<bool> = Vec::with_capacity(levels.len());
    for (level, is_source) in levels {
        let s = if is_source {
            // exact order statistic, no interpolation round-off
            qu.values[qu.levels.partition_point(|&l| l < level)]
        } else {
            qu.eval(level)
        };
        let t = qv.eval(level);
        match source.last() {
            Some(&prev) if s.partial_cmp(&prev) != Some(Ordering::Greater) => {
                // interpolation collapsed onto the previous knot; keep
                // whichever entry belongs to an observed source value
                let k = source.len() - 1;
                if is_source && !from_source[k] {
                    source[k] = s;
                    target[k] = t;
                    from_source[k] = true;
                }
            }
            _ => {
                source.push(s);
                target.push(t);
                from_source.push(is_source);
            }
        }
    }
    for k in 1..target.len() {
        if target[k] < target[k - 1] {
            target[k] = target[k - 1];
        }
    }
    Map1D::from_knots(source, target, Extrapolation::Clamp)
}

/// Evaluate `map` at each point of `t`.
pub fn apply_1d_map(map: &Map1D, t: &[f64]) -> Vec<f64> {
    map.apply_all(t)
}

const MAX_ORACLE_N: usize = 10;

/// Brute-force optimal assignment cost between two equal-size uniform
/// scalar samples: the minimum over all bijections of
/// `((1/n) Σ |uᵢ - v_σ(i)|^p)^{1/p}`. Limited to `n ≤ 10`.
pub fn exact_assignment_cost(u: &[f64], v: &[f64], p: f64) -> Result<f64> {
    let n = u.len();
    if n != v.len() {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: v.len(),
        });
    }
    if n == 0 {
        return Err(Error::InvalidSample("empty scalar sample".into()));
    }
    if n > MAX_ORACLE_N {
        return Err(Error::OracleGuard(format!(
            "assignment enumeration limited to n <= {MAX_ORACLE_N}, got {n}"
        )));
    }
    if !(p > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "order p must be > 0, got {p}"
        )));
    }
    let cost = |perm: &[usize]| -> f64 {
        perm.iter()
            .enumerate()
            .map(|(i, &j)| (u[i] - v[j]).abs().powf(p))
            .sum::<f64>()
    };
    // Heap's algorithm
    let mut perm: Vec<usize> = (0..n).collect();
    let mut c = vec![0usize; n];
    let mut best = cost(&perm);
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            best = best.min(cost(&perm));
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    Ok((best / n as f64).powf(1.0 / p))
}
