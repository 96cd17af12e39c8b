use std::collections::BTreeMap;
use std::fmt::Write as _;

use nalgebra::DMatrix;

use crate::{Error, Result, C64};

/// Voltage magnitudes below this are treated as zero when dividing.
pub const MIN_VOLTAGE: f64 = 1e-9;

const HEADER: &str = "k,bus,v_re,v_im,i_re,i_im,s_re,s_im";

/// Time-aligned phasor records: one row per slot, one column per bus.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSet {
    labels: Vec<String>,
    v: DMatrix<C64>,
    i: Option<DMatrix<C64>>,
    s: Option<DMatrix<C64>>,
}

/// Numeric order when every label is an integer, lexicographic otherwise.
pub fn sort_labels(labels: &mut [String]) {
    let numeric: Option<Vec<i64>> = labels.iter().map(|l| l.parse().ok()).collect();
    if numeric.is_some() {
        labels.sort_by_key(|l| l.parse::<i64>().expect("checked numeric"));
    } else {
        labels.sort();
    }
}

impl MeasurementSet {
    pub fn new(
        labels: Vec<String>,
        v: DMatrix<C64>,
        i: Option<DMatrix<C64>>,
        s: Option<DMatrix<C64>>,
    ) -> Result<Self> {
        let shape = (v.nrows(), labels.len());
        if v.ncols() != labels.len() {
            return Err(Error::Dimension(format!("{} labels for {} voltage columns", labels.len(), v.ncols())));
        }
        if v.nrows() == 0 {
            return Err(Error::Invalid("measurement set has no slots".into()));
        }
        if i.is_none() && s.is_none() {
            return Err(Error::Invalid("measurement set needs currents or powers".into()));
        }
        for (name, m) in [("current", &i), ("power", &s)] {
            if let Some(m) = m {
                if m.shape() != shape {
                    return Err(Error::Dimension(format!(
                        "{name} block is {}x{}, expected {}x{}",
                        m.nrows(),
                        m.ncols(),
                        shape.0,
                        shape.1
                    )));
                }
            }
        }
        let mut uniq = labels.clone();
        uniq.sort();
        uniq.dedup();
        if uniq.len() != labels.len() {
            return Err(Error::Invalid("duplicate bus label in measurement set".into()));
        }
        Ok(Self { labels, v, i, s })
    }

    pub fn slots(&self) -> usize {
        self.v.nrows()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn voltages(&self) -> &DMatrix<C64> {
        &self.v
    }

    pub fn currents(&self) -> Option<&DMatrix<C64>> {
        self.i.as_ref()
    }

    pub fn powers(&self) -> Option<&DMatrix<C64>> {
        self.s.as_ref()
    }

    /// Currents, derived from powers when not recorded.
    pub fn currents_or_derived(&self) -> Result<DMatrix<C64>> {
        match &self.i {
            Some(i) => Ok(i.clone()),
            None => Ok(power_to_current(self)?.i.expect("power_to_current fills currents")),
        }
    }

    /// First `k` slots.
    pub fn first_slots(&self, k: usize) -> Result<Self> {
        if k == 0 || k > self.slots() {
            return Err(Error::Invalid(format!("cannot take {k} of {} slots", self.slots())));
        }
        let take = |m: &DMatrix<C64>| m.rows(0, k).into_owned();
        Ok(Self {
            labels: self.labels.clone(),
            v: take(&self.v),
            i: self.i.as_ref().map(take),
            s: self.s.as_ref().map(take),
        })
    }

    /// Restricts to the named buses, in the given order.
    pub fn select(&self, labels: &[String]) -> Result<Self> {
        let idx = labels
            .iter()
            .map(|l| self.labels.iter().position(|x| x == l).ok_or_else(|| Error::UnknownBus(l.clone())))
            .collect::<Result<Vec<_>>>()?;
        let pick = |m: &DMatrix<C64>| m.select_columns(&idx);
        Self::new(labels.to_vec(), pick(&self.v), self.i.as_ref().map(pick), self.s.as_ref().map(pick))
    }

    /// Column permutation into the canonical bus order.
    pub fn canonical(&self) -> Self {
        let mut labels = self.labels.clone();
        sort_labels(&mut labels);
        self.select(&labels).expect("same label set")
    }
}

/// `i = conj(s / v)` cellwise; powers are kept.
pub fn power_to_current(m: &MeasurementSet) -> Result<MeasurementSet> {
    let s = m.s.as_ref().ok_or_else(|| Error::Invalid("power channel is absent".into()))?;
    let mut i = DMatrix::zeros(m.v.nrows(), m.v.ncols());
    for ((out, &v), &p) in i.iter_mut().zip(m.v.iter()).zip(s.iter()) {
        if v.norm() < MIN_VOLTAGE {
            return Err(Error::Invalid(format!("voltage modulus {:.3e} below {MIN_VOLTAGE:e}", v.norm())));
        }
        *out = (p / v).conj();
    }
    Ok(MeasurementSet { i: Some(i), ..m.clone() })
}

/// `s = v conj(i)` cellwise; currents are kept.
pub fn current_to_power(m: &MeasurementSet) -> Result<MeasurementSet> {
    let i = m.i.as_ref().ok_or_else(|| Error::Invalid("current channel is absent".into()))?;
    let s = m.v.zip_map(i, |v, c| v * c.conj());
    Ok(MeasurementSet { s: Some(s), ..m.clone() })
}

pub fn write_phasor_table(m: &MeasurementSet) -> String {
    let mut out = String::with_capacity(64 * m.slots() * m.labels.len());
    out.push_str(HEADER);
    out.push('\n');
    let canon = m.canonical();
    let cell = |out: &mut String, ch: &Option<DMatrix<C64>>, k: usize, j: usize| match ch {
        Some(x) => {
            let z = x[(k, j)];
            let _ = write!(out, ",{},{}", z.re, z.im);
        }
        None => out.push_str(",,"),
    };
    for k in 0..canon.slots() {
        for (j, label) in canon.labels.iter().enumerate() {
            let v = canon.v[(k, j)];
            let _ = write!(out, "{k},{label},{},{}", v.re, v.im);
            cell(&mut out, &canon.i, k, j);
            cell(&mut out, &canon.s, k, j);
            out.push('\n');
        }
    }
    out
}

type Cell = (C64, Option<C64>, Option<C64>);

pub fn parse_phasor_table(text: &str) -> Result<MeasurementSet> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, h)) if h.trim() == HEADER => {}
        Some((n, _)) => return Err(Error::parse(n + 1, 1, format!("expected header `{HEADER}`"))),
        None => return Err(Error::Invalid("empty phasor table".into())),
    }

    let mut cells: BTreeMap<usize, BTreeMap<String, Cell>> = BTreeMap::new();
    let mut has_i: Option<bool> = None;
    let mut has_s: Option<bool> = None;
    for (n, line) in lines {
        let line_no = n + 1;
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 8 {
            return Err(Error::parse(line_no, 1, format!("expected 8 fields, found {}", fields.len())));
        }
        let k: usize = fields[0]
            .parse()
            .map_err(|_| Error::parse(line_no, 1, format!("slot `{}` is not a non-negative integer", fields[0])))?;
        let bus = fields[1].to_string();
        if bus.is_empty() {
            return Err(Error::parse(line_no, 2, "empty bus label"));
        }
        let num = |idx: usize| -> Result<Option<f64>> {
            let f = fields[idx];
            if f.is_empty() {
                return Ok(None);
            }
            f.parse::<f64>()
                .map(Some)
                .map_err(|_| Error::parse(line_no, idx + 1, format!("malformed number `{f}`")))
        };
        let pair = |a: usize, name: &str| -> Result<Option<C64>> {
            match (num(a)?, num(a + 1)?) {
                (Some(re), Some(im)) => Ok(Some(C64::new(re, im))),
                (None, None) => Ok(None),
                _ => Err(Error::parse(line_no, a + 1, format!("half-empty {name} phasor"))),
            }
        };
        let v = pair(2, "voltage")?.ok_or_else(|| Error::parse(line_no, 3, "voltage is required"))?;
        let i = pair(4, "current")?;
        let s = pair(6, "power")?;
        for (seen, cur, name) in [(&mut has_i, i.is_some(), "current"), (&mut has_s, s.is_some(), "power")] {
            match *seen {
                None => *seen = Some(cur),
                Some(prev) if prev != cur => {
                    return Err(Error::parse(line_no, 1, format!("{name} channel is present in some rows only")))
                }
                _ => {}
            }
        }
        if cells.entry(k).or_default().insert(bus.clone(), (v, i, s)).is_some() {
            return Err(Error::parse(line_no, 1, format!("duplicate cell (slot {k}, bus {bus})")));
        }
    }

    let Some(first) = cells.values().next() else {
        return Err(Error::Invalid("phasor table has no rows".into()));
    };
    let mut labels: Vec<String> = first.keys().cloned().collect();
    sort_labels(&mut labels);
    for (k, row) in &cells {
        if row.len() != labels.len() || labels.iter().any(|l| !row.contains_key(l)) {
            return Err(Error::Invalid(format!("slot {k} does not cover the same buses as the first slot")));
        }
    }
    if cells.keys().enumerate().any(|(pos, &k)| pos != k) {
        return Err(Error::Invalid("slot numbers must run 0, 1, 2, ... without gaps".into()));
    }

    let (kk, nn) = (cells.len(), labels.len());
    let mut v = DMatrix::zeros(kk, nn);
    let mut i = has_i.unwrap_or(false).then(|| DMatrix::zeros(kk, nn));
    let mut s = has_s.unwrap_or(false).then(|| DMatrix::zeros(kk, nn));
    for (k, row) in cells.values().enumerate() {
        for (j, l) in labels.iter().enumerate() {
            let (vv, ii, ss) = row[l];
            v[(k, j)] = vv;
            if let (Some(m), Some(x)) = (i.as_mut(), ii) {
                m[(k, j)] = x;
            }
            if let (Some(m), Some(x)) = (s.as_mut(), ss) {
                m[(k, j)] = x;
            }
        }
    }
    MeasurementSet::new(labels, v, i, s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn one(v: C64, s: C64) -> MeasurementSet {
        MeasurementSet::new(
            vec!["1".into()],
            DMatrix::from_element(1, 1, v),
            None,
            Some(DMatrix::from_element(1, 1, s)),
        )
        .unwrap()
    }

    #[test]
    fn power_to_current_examples() {
        let i = power_to_current(&one(c(1.0, 0.0), c(1.0, 0.0))).unwrap();
        assert_eq!(i.currents().unwrap()[(0, 0)], c(1.0, 0.0));
        let i = power_to_current(&one(c(0.0, 1.0), c(1.0, 0.0))).unwrap();
        assert!((i.currents().unwrap()[(0, 0)] - c(0.0, 1.0)).norm() < 1e-15);
        assert!(power_to_current(&one(c(0.0, 1e-10), c(1.0, 0.0))).is_err());
    }

    #[test]
    fn header_only_is_rejected() {
        assert!(parse_phasor_table(&format!("{HEADER}\n")).is_err());
        assert!(parse_phasor_table("").is_err());
    }

    #[test]
    fn power_only_file() {
        let text = format!("{HEADER}\n0,1,1,0,,,0.5,0.1\n0,2,0.99,-0.01,,,-0.5,-0.1\n");
        let m = parse_phasor_table(&text).unwrap();
        assert!(m.currents().is_none());
        assert_eq!(m.powers().unwrap()[(0, 1)], c(-0.5, -0.1));
        assert_eq!(write_phasor_table(&m), text);
    }

    #[test]
    fn duplicate_and_ragged_rejected() {
        let dup = format!("{HEADER}\n0,1,1,0,1,0,,\n0,1,1,0,1,0,,\n");
        assert!(parse_phasor_table(&dup).is_err());
        let ragged = format!("{HEADER}\n0,1,1,0,1,0,,\n0,2,1,0,1,0,,\n1,1,1,0,1,0,,\n");
        assert!(parse_phasor_table(&ragged).is_err());
        let mixed = format!("{HEADER}\n0,1,1,0,1,0,,\n0,2,1,0,,,1,0\n");
        assert!(parse_phasor_table(&mixed).is_err());
    }

    #[test]
    fn numeric_labels_sort_numerically() {
        let mut l: Vec<String> = ["10", "2", "1"].iter().map(|s| s.to_string()).collect();
        sort_labels(&mut l);
        assert_eq!(l, ["1", "2", "10"]);
    }

    fn arb_set() -> impl Strategy<Value = MeasurementSet> {
        (1usize..4, 1usize..4, any::<bool>(), any::<bool>())
            .prop_flat_map(|(k, n, has_i, has_s)| {
                let len = k * n;
                let vals = proptest::collection::vec((-1e3f64..1e3, -1e3f64..1e3), len * 3);
                (Just((k, n, has_i || !has_s, has_s)), vals)
            })
            .prop_map(|((k, n, has_i, has_s), vals)| {
                let block = |off: usize| DMatrix::from_fn(k, n, |a, b| {
                    let (re, im) = vals[off + a * n + b];
                    C64::new(re / 7.0, im * 1.1)
                });
                let labels = (0..n).map(|j| (j + 1).to_string()).collect();
                MeasurementSet::new(labels, block(0), has_i.then(|| block(k * n)), has_s.then(|| block(2 * k * n)))
                    .unwrap()
            })
    }

    proptest! {
        #[test]
        fn phasor_round_trip(m in arb_set()) {
            let back = parse_phasor_table(&write_phasor_table(&m)).unwrap();
            prop_assert_eq!(back, m);
        }

        #[test]
        fn conversions_are_inverse(m in arb_set()) {
            prop_assume!(m.currents().is_some());
            prop_assume!(m.voltages().iter().all(|v| v.norm() > 1e-3));
            let i0 = m.currents().unwrap().clone();
            let stripped = MeasurementSet::new(m.labels().to_vec(), m.voltages().clone(), None,
                Some(current_to_power(&m).unwrap().powers().unwrap().clone())).unwrap();
            let i1 = power_to_current(&stripped).unwrap().currents().unwrap().clone();
            for (a, b) in i0.iter().zip(i1.iter()) {
                prop_assert!((a - b).norm() <= 1e-12 * a.norm().max(1.0));
            }
        }

        #[test]
        fn parser_is_total(text in "[0-9a-z,.\\-\n ]{0,200}") {
            let _ = parse_phasor_table(&format!("{HEADER}\n{text}"));
            let _ = parse_phasor_table(&text);
        }
    }
}
