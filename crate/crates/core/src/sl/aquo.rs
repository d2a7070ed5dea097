//! AQUO machinery / propeller / cavitation model.
//!
//! Each component is piecewise in frequency with the form
//! `a + b·log10(f) + c·log10(V)`; cavitation only contributes above `V_cav`.
//! The Cargo table is built in and also serves tankers. Other classes load
//! from a `class,freq_hz,term,value` CSV where `term` is one of
//! `l_ref, v_ref, v_cav, l_min, l_max, v_min, v_max` (with `freq_hz = 0`) or
//! `{mach,prop,cav}_{a,b,v}` giving the segment that starts at `freq_hz`.

use std::collections::{BTreeMap, HashMap};
use std::io::Read;

use serde::Deserialize;

use crate::scalar::{db, from_db, Scalar};
use crate::vessel::VesselAttributes;

use super::SlError;

/// AQUO vessel classes reachable from AIS type codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AquoClass {
    Cargo,
    Tanker,
    Ferry,
    LargeCruise,
    Fishing,
    Leisure,
    Sailing,
}

impl AquoClass {
    pub fn from_ais(ais_type: u8, length_m: Option<f64>) -> Option<Self> {
        match ais_type {
            70..=79 => Some(Self::Cargo),
            80..=89 => Some(Self::Tanker),
            60..=69 => Some(if length_m.is_some_and(|l| l > 200.0) {
                Self::LargeCruise
            } else {
                Self::Ferry
            }),
            30 => Some(Self::Fishing),
            37 => Some(Self::Leisure),
            36 => Some(Self::Sailing),
            _ => None,
        }
    }

    /// Key of the coefficient table that serves this class.
    pub fn table_key(self) -> &'static str {
        match self {
            Self::Cargo | Self::Tanker => "cargo",
            Self::Ferry => "ferry",
            Self::LargeCruise => "large_cruise",
            Self::Fishing => "fishing",
            Self::Leisure => "leisure",
            Self::Sailing => "sailing",
        }
    }
}

/// One frequency segment of a component: valid from `from_hz` upwards.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment<T> {
    pub from_hz: T,
    pub a: T,
    pub b_log_f: T,
    pub c_log_v: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AquoClassParams<T> {
    pub class_name: String,
    pub l_ref: T,
    pub v_ref: T,
    pub v_cav: T,
    pub length_domain: (T, T),
    pub speed_domain: (T, T),
    pub machinery: Vec<Segment<T>>,
    pub propeller: Vec<Segment<T>>,
    pub cavitation: Vec<Segment<T>>,
}

fn seg<T: Scalar>(from_hz: f64, a: f64, b: f64, c: f64) -> Segment<T> {
    Segment {
        from_hz: T::lit(from_hz),
        a: T::lit(a),
        b_log_f: T::lit(b),
        c_log_v: T::lit(c),
    }
}

fn component<T: Scalar>(segments: &[Segment<T>], f: T, speed: T) -> Option<T> {
    let s = segments.iter().rev().find(|s| f >= s.from_hz).or(segments.first())?;
    Some(s.a + s.b_log_f * f.log10() + s.c_log_v * speed.log10())
}

impl<T: Scalar> AquoClassParams<T> {
    /// Built-in Cargo table.
    pub fn cargo() -> Self {
        Self {
            class_name: "cargo".into(),
            l_ref: T::lit(180.0),
            v_ref: T::lit(14.0),
            v_cav: T::lit(10.0),
            length_domain: (T::lit(100.0), T::lit(250.0)),
            speed_domain: (T::lit(8.0), T::lit(20.0)),
            machinery: vec![seg(0.0, 136.0, 0.0, 15.0), seg(200.0, 186.0, -22.0, 15.0)],
            propeller: vec![seg(0.0, 109.0, -5.0, 50.0), seg(80.0, 156.0, -30.0, 50.0)],
            cavitation: vec![seg(0.0, 79.0, 10.0, 60.0), seg(50.0, 129.0, -20.0, 60.0)],
        }
    }

    /// Speed after soft clamping into the validity domain.
    pub fn effective_speed(&self, speed_kn: T) -> T {
        speed_kn.max(self.speed_domain.0).min(self.speed_domain.1)
    }

    /// Component levels `(machinery, propeller, cavitation)` at reference length.
    pub fn components(&self, f: T, speed_kn: T) -> (T, T, Option<T>) {
        let v = self.effective_speed(speed_kn);
        let mach = component(&self.machinery, f, v).unwrap_or(T::neg_infinity());
        let prop = component(&self.propeller, f, v).unwrap_or(T::neg_infinity());
        let cav = if v > self.v_cav {
            component(&self.cavitation, f, v)
        } else {
            None
        };
        (mach, prop, cav)
    }

    /// Total PSD (dB re 1 µPa²/Hz at 1 m) including the size term.
    pub fn psd(&self, f: T, speed_kn: T, length_m: T) -> T {
        let (mach, prop, cav) = self.components(f, speed_kn);
        let mut total = from_db(mach) + from_db(prop);
        if let Some(c) = cav {
            total += from_db(c);
        }
        db(total) + T::lit(25.0) * (length_m / self.l_ref).log10()
    }
}

/// Registry of AQUO tables keyed by class name.
#[derive(Debug, Clone)]
pub struct AquoTables<T> {
    tables: HashMap<String, AquoClassParams<T>>,
}

impl<T: Scalar> Default for AquoTables<T> {
    fn default() -> Self {
        Self::builtin()
    }
}

#[derive(Debug, Deserialize)]
struct AquoRow {
    class: String,
    freq_hz: f64,
    term: String,
    value: f64,
}

#[derive(Default)]
struct PartialTable {
    scalars: HashMap<String, f64>,
    segments: [BTreeMap<u64, [Option<f64>; 3]>; 3],
}

impl<T: Scalar> AquoTables<T> {
    pub fn builtin() -> Self {
        let mut tables = HashMap::new();
        tables.insert("cargo".to_string(), AquoClassParams::cargo());
        Self { tables }
    }

    pub fn get(&self, key: &str) -> Option<&AquoClassParams<T>> {
        self.tables.get(key)
    }

    pub fn insert(&mut self, table: AquoClassParams<T>) {
        self.tables.insert(table.class_name.clone(), table);
    }

    pub fn class_names(&self) -> Vec<&str> {
        let mut names: Vec<&str> = self.tables.keys().map(String::as_str).collect();
        names.sort_unstable();
        names
    }

    /// Adds (or replaces) the classes described by a coefficient CSV.
    pub fn load_csv<R: Read>(&mut self, reader: R) -> Result<(), SlError> {
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut partial: BTreeMap<String, PartialTable> = BTreeMap::new();
        for (line, row) in rdr.deserialize::<AquoRow>().enumerate() {
            let row = row.map_err(|e| SlError::Config(format!("AQUO row {}: {e}", line + 2)))?;
            let entry = partial.entry(row.class.clone()).or_default();
            let comp_coef = row.term.split_once('_').and_then(|(c, k)| {
                let ci = ["mach", "prop", "cav"].iter().position(|x| *x == c)?;
                let ki = ["a", "b", "v"].iter().position(|x| *x == k)?;
                Some((ci, ki))
            });
            match comp_coef {
                Some((ci, ki)) => {
                    let key = row.freq_hz.to_bits();
                    entry.segments[ci].entry(key).or_insert([None; 3])[ki] = Some(row.value);
                }
                None => {
                    entry.scalars.insert(row.term.clone(), row.value);
                }
            }
        }
        for (name, p) in partial {
            let scalar = |k: &str| {
                p.scalars
                    .get(k)
                    .copied()
                    .ok_or_else(|| SlError::Config(format!("AQUO class '{name}' lacks '{k}'")))
            };
            let segs = |i: usize| -> Result<Vec<Segment<T>>, SlError> {
                let mut out: Vec<Segment<T>> = Vec::new();
                for (bits, coefs) in &p.segments[i] {
                    match coefs {
                        [Some(a), Some(b), Some(c)] => {
                            out.push(seg(f64::from_bits(*bits), *a, *b, *c))
                        }
                        _ => {
                            return Err(SlError::Config(format!(
                                "AQUO class '{name}' has an incomplete segment at {} Hz",
                                f64::from_bits(*bits)
                            )))
                        }
                    }
                }
                out.sort_by(|x, y| x.from_hz.partial_cmp(&y.from_hz).expect("finite"));
                Ok(out)
            };
            let table = AquoClassParams {
                class_name: name.clone(),
                l_ref: T::lit(scalar("l_ref")?),
                v_ref: T::lit(scalar("v_ref")?),
                v_cav: T::lit(scalar("v_cav")?),
                length_domain: (T::lit(scalar("l_min")?), T::lit(scalar("l_max")?)),
                speed_domain: (T::lit(scalar("v_min")?), T::lit(scalar("v_max")?)),
                machinery: segs(0)?,
                propeller: segs(1)?,
                cavitation: segs(2)?,
            };
            if table.machinery.is_empty() || table.propeller.is_empty() {
                return Err(SlError::Config(format!(
                    "AQUO class '{name}' needs machinery and propeller segments"
                )));
            }
            if !(table.l_ref > T::zero() && table.v_cav > T::zero()) || table.speed_domain.0 > table.speed_domain.1 {
                return Err(SlError::Config(format!("AQUO class '{name}' has invalid domains")));
            }
            self.insert(table);
        }
        Ok(())
    }
}

/// AQUO PSD for a vessel already resolved to `class`.
pub fn aquo_psd_for_class<T: Scalar>(
    tables: &AquoTables<T>,
    class: AquoClass,
    v: &VesselAttributes<T>,
    f: T,
) -> Result<T, SlError> {
    let table = tables.get(class.table_key()).ok_or(SlError::Unsupported {
        model: "AQUO",
        ais_type: v.ais_type,
    })?;
    let length = v.length_m.ok_or(SlError::MissingAttribute("length_m"))?;
    if !(v.speed_kn > T::zero()) {
        return Err(SlError::Domain(format!("speed must be positive, got {}", v.speed_kn)));
    }
    if v.speed_kn < table.speed_domain.0 || v.speed_kn > table.speed_domain.1 {
        log::debug!(
            "AQUO {}: speed {} kn clamped into [{}, {}]",
            table.class_name,
            v.speed_kn,
            table.speed_domain.0,
            table.speed_domain.1
        );
    }
    Ok(table.psd(f, v.speed_kn, length))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cargo_reference_point() {
        let t = AquoClassParams::<f64>::cargo();
        let (m, p, c) = t.components(100.0, 14.0);
        assert!((m - 153.19).abs() < 0.005 && (p - 153.31).abs() < 0.005);
        assert!((c.unwrap() - 157.77).abs() < 0.005);
        let total = t.psd(100.0, 14.0, 180.0);
        assert!((total - 160.089_173_394_491_27).abs() < 1e-9, "{total}");
    }

    #[test]
    fn no_cavitation_at_or_below_v_cav() {
        let t = AquoClassParams::<f64>::cargo();
        let (m, p, c) = t.components(300.0, 10.0);
        assert!(c.is_none());
        let two = 10.0 * (10f64.powf(m / 10.0) + 10f64.powf(p / 10.0)).log10();
        assert!((t.psd(300.0, 10.0, 180.0) - two).abs() < 1e-12);
    }

    #[test]
    fn doubling_length_adds_25log2() {
        let t = AquoClassParams::<f64>::cargo();
        let d = t.psd(500.0, 12.0, 360.0) - t.psd(500.0, 12.0, 180.0);
        assert!((d - 25.0 * 2f64.log10()).abs() < 1e-12);
        assert!((d - 7.53).abs() < 0.005);
    }

    #[test]
    fn speed_is_clamped_into_domain() {
        let t = AquoClassParams::<f64>::cargo();
        assert_eq!(t.psd(100.0, 30.0, 180.0), t.psd(100.0, 20.0, 180.0));
        assert_eq!(t.psd(100.0, 3.0, 180.0), t.psd(100.0, 8.0, 180.0));
    }

    #[test]
    fn csv_round_trips_cargo_shape() {
        let csv = "\
# comment
class,freq_hz,term,value
c2,0,l_ref,180
c2,0,v_ref,14
c2,0,v_cav,10
c2,0,l_min,100
c2,0,l_max,250
c2,0,v_min,8
c2,0,v_max,20
c2,0,mach_a,136
c2,0,mach_b,0
c2,0,mach_v,15
c2,200,mach_a,186
c2,200,mach_b,-22
c2,200,mach_v,15
c2,0,prop_a,109
c2,0,prop_b,-5
c2,0,prop_v,50
c2,80,prop_a,156
c2,80,prop_b,-30
c2,80,prop_v,50
c2,0,cav_a,79
c2,0,cav_b,10
c2,0,cav_v,60
c2,50,cav_a,129
c2,50,cav_b,-20
c2,50,cav_v,60
";
        let mut tables = AquoTables::<f64>::builtin();
        tables.load_csv(csv.as_bytes()).unwrap();
        let loaded = tables.get("c2").unwrap();
        let builtin = AquoClassParams::<f64>::cargo();
        for f in [20.0, 60.0, 100.0, 500.0, 2000.0] {
            assert_eq!(loaded.psd(f, 15.0, 200.0), builtin.psd(f, 15.0, 200.0));
        }
    }

    #[test]
    fn csv_rejects_incomplete_tables() {
        let csv = "class,freq_hz,term,value\nx,0,l_ref,10\n";
        let mut tables = AquoTables::<f64>::builtin();
        assert!(matches!(tables.load_csv(csv.as_bytes()), Err(SlError::Config(_))));
    }

    #[test]
    fn shipped_placeholder_loads() {
        let mut tables = AquoTables::<f64>::builtin();
        tables
            .load_csv(include_str!("../../data/aquo_placeholder.csv").as_bytes())
            .unwrap();
        assert_eq!(
            tables.class_names(),
            vec!["cargo", "ferry", "fishing", "large_cruise", "leisure", "sailing"]
        );
    }
}
