use crate::ingest::NetworkCase;
use crate::{AdmittanceMatrix, Error, Result, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BuildMode {
    /// Series admittances only; every row sums to zero.
    Shuntless,
    /// Series admittances, line charging, off-nominal taps and bus shunts.
    #[default]
    Physical,
}

/// Assembles the bus admittance matrix, indexed in case bus order.
pub fn build_admittance(case: &NetworkCase, mode: BuildMode) -> Result<AdmittanceMatrix> {
    let mut y = AdmittanceMatrix::zeros(case.labels());
    let index = |id: usize| case.bus_index(id).ok_or_else(|| Error::UnknownBus(id.to_string()));
    for br in &case.branches {
        let (f, t) = (index(br.from)?, index(br.to)?);
        let z = C64::new(br.r, br.x);
        if z.norm() == 0.0 {
            return Err(Error::ZeroImpedance { from: br.from.to_string(), to: br.to.to_string() });
        }
        if f == t {
            return Err(Error::Invalid(format!("branch {}-{} is a self-loop", br.from, br.to)));
        }
        let ys = z.inv();
        match mode {
            BuildMode::Shuntless => {
                y.add(f, f, ys);
                y.add(t, t, ys);
                y.add(f, t, -ys);
            }
            BuildMode::Physical => {
                if !(br.tap > 0.0) {
                    return Err(Error::Invalid(format!("branch {}-{} has tap {}", br.from, br.to, br.tap)));
                }
                let half = C64::new(0.0, br.b_charging / 2.0);
                y.add(f, f, (ys + half) / (br.tap * br.tap));
                y.add(t, t, ys + half);
                y.add(f, t, -ys / br.tap);
            }
        }
    }
    if mode == BuildMode::Physical {
        for (k, bus) in case.buses.iter().enumerate() {
            y.add(k, k, C64::new(bus.shunt_g, bus.shunt_b));
        }
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{Branch, Bus};

    fn case(branches: Vec<Branch>, n: usize) -> NetworkCase {
        let mut buses = vec![Bus::slack(1, 1.0)];
        buses.extend((2..=n).map(|id| Bus::pq(id, 0.0, 0.0)));
        NetworkCase { base_power: 100.0, buses, branches, generators: vec![] }
    }

    #[test]
    fn two_bus_line() {
        let y = build_admittance(&case(vec![Branch::line(1, 2, 0.2, 0.4)], 2), BuildMode::Physical).unwrap();
        let e = C64::new(1.0, -2.0);
        assert!((y.get(0, 0) - e).norm() < 1e-15);
        assert!((y.get(0, 1) + e).norm() < 1e-15);
        assert!((y.get(1, 1) - e).norm() < 1e-15);
        assert!(y.has_zero_row_sums(1e-9));
    }

    #[test]
    fn star_structure() {
        let c = case(vec![Branch::line(1, 2, 0.2, 0.4), Branch::line(1, 3, 0.1, 0.3)], 3);
        let y = build_admittance(&c, BuildMode::Shuntless).unwrap();
        let (t1, t2) = (C64::new(0.2, 0.4).inv(), C64::new(0.1, 0.3).inv());
        assert!((y.get(0, 0) - (t1 + t2)).norm() < 1e-14);
        assert!((y.get(0, 1) + t1).norm() < 1e-14);
        assert!((y.get(0, 2) + t2).norm() < 1e-14);
        assert_eq!(y.get(1, 2), C64::new(0.0, 0.0));
    }

    #[test]
    fn duplicate_branches_merge() {
        let c = case(vec![Branch::line(1, 2, 0.2, 0.4), Branch::line(2, 1, 0.2, 0.4)], 2);
        let y = build_admittance(&c, BuildMode::Shuntless).unwrap();
        assert!((y.get(0, 1) + C64::new(2.0, -4.0)).norm() < 1e-14);
    }

    #[test]
    fn zero_impedance_and_unknown_bus() {
        let c = case(vec![Branch::line(1, 2, 0.0, 0.0)], 2);
        assert!(matches!(build_admittance(&c, BuildMode::Physical), Err(Error::ZeroImpedance { .. })));
        let c = case(vec![Branch::line(1, 7, 0.1, 0.1)], 2);
        assert!(matches!(build_admittance(&c, BuildMode::Physical), Err(Error::UnknownBus(_))));
    }

    #[test]
    fn tap_and_charging_stamp() {
        let mut br = Branch::line(1, 2, 0.0, 0.5);
        br.tap = 0.5;
        br.b_charging = 0.2;
        let y = build_admittance(&case(vec![br], 2), BuildMode::Physical).unwrap();
        // y = -2j; from side (y + 0.1j) / 0.25, to side y + 0.1j, mutual -y / 0.5.
        assert!((y.get(0, 0) - C64::new(0.0, -7.6)).norm() < 1e-14);
        assert!((y.get(1, 1) - C64::new(0.0, -1.9)).norm() < 1e-14);
        assert!((y.get(0, 1) - C64::new(0.0, 4.0)).norm() < 1e-14);
    }
}
