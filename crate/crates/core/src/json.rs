//! JSON exchange formats. Integers are written as decimal strings and read
//! from strings or plain numbers.
//!
//! Lattice: `{"frame": {"rank": N, "gram": [[..]]}, "basis_num": [[..]], "basis_log2_den": k}`.
//! Instance: a lattice plus `{"maps": {"t": .., "u": ..}}`, each map
//! `{"num": [[..]], "log2_den": k}` on the lattice frame.
//! Tower: `{"tower": {"d", "L", "L1", "L2", "maps": {t, f, child_f, child_t}, "child"}}`.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::action::{validate_dihedral, DihedralAction, FrameMap};
use crate::barnes_wall::BwTower;
use crate::lattice::{Frame, Lattice};
use crate::linalg::{DyadicMatrix, IntMatrix};
use crate::testkit::InstanceSpec;

pub fn ser_big<S: Serializer>(x: &BigInt, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&x.to_string())
}

pub fn ser_ratio<S: Serializer>(x: &num_rational::BigRational, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&x.to_string())
}

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("line {line}, column {column}: {msg}")]
    Syntax { line: usize, column: usize, msg: String },
    #[error("field {field}: {msg}")]
    Field { field: String, msg: String },
}

impl From<serde_json::Error> for FormatError {
    fn from(e: serde_json::Error) -> Self {
        FormatError::Syntax {
            line: e.line(),
            column: e.column(),
            msg: e.to_string(),
        }
    }
}

fn field(name: &str, msg: impl ToString) -> FormatError {
    FormatError::Field {
        field: name.into(),
        msg: msg.to_string(),
    }
}

/// Integer carried as a decimal string; numbers are accepted on input.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Int(pub BigInt);

impl Serialize for Int {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.0.to_string())
    }
}

impl<'de> Deserialize<'de> for Int {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Int;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an integer or a decimal string")
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Int, E> {
                Ok(Int(v.into()))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Int, E> {
                Ok(Int(v.into()))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Int, E> {
                v.trim()
                    .parse()
                    .map(Int)
                    .map_err(|_| E::custom(format!("not an integer: {v:?}")))
            }
        }
        d.deserialize_any(V)
    }
}

type Rows = Vec<Vec<Int>>;

fn to_rows(m: &IntMatrix) -> Rows {
    m.to_rows()
        .into_iter()
        .map(|r| r.into_iter().map(Int).collect())
        .collect()
}

fn from_rows(rows: &Rows, cols: usize, name: &str) -> Result<IntMatrix, FormatError> {
    for (i, r) in rows.iter().enumerate() {
        if r.len() != cols {
            return Err(field(&format!("{name}[{i}]"), format!("expected {cols} entries, found {}", r.len())));
        }
    }
    let data = rows.iter().flatten().map(|x| x.0.clone()).collect();
    Ok(IntMatrix::from_flat(rows.len(), cols, data))
}

#[derive(Serialize, Deserialize, Clone, Debug)]
pub struct FrameJson {
    pub rank: usize,
    pub gram: Rows,
}

#[derive(Serialize, Deserialize, Clone, Debug)]
pub struct LatticeJson {
    pub frame: FrameJson,
    pub basis_num: Rows,
    pub basis_log2_den: u32,
}

#[derive(Serialize, Deserialize, Clone, Debug)]
pub struct MapJson {
    pub num: Rows,
    pub log2_den: u32,
}

impl LatticeJson {
    pub fn from_lattice(l: &Lattice) -> Self {
        LatticeJson {
            frame: FrameJson {
                rank: l.frame().rank(),
                gram: to_rows(l.frame().gram()),
            },
            basis_num: to_rows(l.basis().numerator()),
            basis_log2_den: l.basis().log2_den(),
        }
    }

    pub fn frame(&self, name: &str) -> Result<Arc<Frame>, FormatError> {
        let n = self.frame.rank;
        if self.frame.gram.len() != n {
            return Err(field(&format!("{name}.frame.gram"), format!("expected {n} rows")));
        }
        let g = from_rows(&self.frame.gram, n, &format!("{name}.frame.gram"))?;
        Frame::new(g).map_err(|e| field(&format!("{name}.frame.gram"), e))
    }

    pub fn to_lattice(&self, name: &str) -> Result<Lattice, FormatError> {
        let frame = self.frame(name)?;
        let num = from_rows(&self.basis_num, frame.rank(), &format!("{name}.basis_num"))?;
        let gens = DyadicMatrix::new(num, self.basis_log2_den);
        Lattice::new(frame, &gens).map_err(|e| field(&format!("{name}.basis_num"), e))
    }
}

impl MapJson {
    pub fn from_map(m: &FrameMap) -> Self {
        MapJson {
            num: to_rows(m.matrix().numerator()),
            log2_den: m.matrix().log2_den(),
        }
    }

    pub fn to_map(&self, frame: &Arc<Frame>, name: &str) -> Result<FrameMap, FormatError> {
        let n = frame.rank();
        if self.num.len() != n {
            return Err(field(&format!("maps.{name}.num"), format!("expected {n} rows")));
        }
        let m = from_rows(&self.num, n, &format!("maps.{name}.num"))?;
        FrameMap::new(frame.clone(), DyadicMatrix::new(m, self.log2_den)).map_err(|e| field(&format!("maps.{name}"), e))
    }
}

fn get_map<'a>(maps: &'a BTreeMap<String, MapJson>, name: &str) -> Result<&'a MapJson, FormatError> {
    maps.get(name).ok_or_else(|| field(&format!("maps.{name}"), "missing"))
}

#[derive(Serialize, Deserialize, Clone, Debug)]
pub struct InstanceJson {
    #[serde(flatten)]
    pub lattice: LatticeJson,
    pub maps: BTreeMap<String, MapJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spec: Option<InstanceSpec>,
}

impl InstanceJson {
    pub fn from_action(a: &DihedralAction, spec: Option<InstanceSpec>) -> Self {
        let mut maps = BTreeMap::new();
        maps.insert("t".into(), MapJson::from_map(a.t()));
        maps.insert("u".into(), MapJson::from_map(a.u()));
        InstanceJson {
            lattice: LatticeJson::from_lattice(a.lattice()),
            maps,
            spec,
        }
    }

    pub fn to_action(&self) -> Result<DihedralAction, FormatError> {
        let l = self.lattice.to_lattice("lattice")?;
        let t = get_map(&self.maps, "t")?.to_map(l.frame(), "t")?;
        let u = get_map(&self.maps, "u")?.to_map(l.frame(), "u")?;
        validate_dihedral(&l, &t, &u).map_err(|e| field("maps", e))
    }
}

#[derive(Serialize, Deserialize, Clone, Debug)]
pub struct TowerJson {
    pub d: u32,
    #[serde(rename = "L")]
    pub lattice: LatticeJson,
    #[serde(rename = "L1")]
    pub l1: LatticeJson,
    #[serde(rename = "L2")]
    pub l2: LatticeJson,
    pub maps: BTreeMap<String, MapJson>,
    pub child: Option<Box<TowerJson>>,
}

#[derive(Serialize, Deserialize, Clone, Debug)]
pub struct TowerFile {
    pub tower: TowerJson,
}

impl TowerJson {
    pub fn from_tower(t: &BwTower) -> Self {
        let mut maps = BTreeMap::new();
        maps.insert("t".into(), MapJson::from_map(t.t()));
        maps.insert("f".into(), MapJson::from_map(t.f()));
        maps.insert("child_f".into(), MapJson::from_map(t.child_f()));
        maps.insert("child_t".into(), MapJson::from_map(t.child_t()));
        TowerJson {
            d: t.d(),
            lattice: LatticeJson::from_lattice(t.lattice()),
            l1: LatticeJson::from_lattice(t.l1()),
            l2: LatticeJson::from_lattice(t.l2()),
            maps,
            child: t.child().map(|c| Box::new(TowerJson::from_tower(c))),
        }
    }

    pub fn to_tower(&self) -> Result<BwTower, FormatError> {
        let l = self.lattice.to_lattice("L")?;
        let l1 = self.l1.to_lattice("L1")?;
        let l2 = self.l2.to_lattice("L2")?;
        let t = get_map(&self.maps, "t")?.to_map(l.frame(), "t")?;
        let f = get_map(&self.maps, "f")?.to_map(l.frame(), "f")?;
        let cf = get_map(&self.maps, "child_f")?.to_map(l1.frame(), "child_f")?;
        let ct = get_map(&self.maps, "child_t")?.to_map(l1.frame(), "child_t")?;
        let child = match &self.child {
            Some(c) => Some(c.to_tower()?),
            None => None,
        };
        BwTower::from_parts(self.d, l, l1, l2, t, f, cf, ct, child).map_err(|e| field("tower", e))
    }
}

pub fn tower_to_string(t: &BwTower) -> String {
    serde_json::to_string_pretty(&TowerFile {
        tower: TowerJson::from_tower(t),
    })
    .expect("serializable")
}

pub fn tower_from_str(s: &str) -> Result<BwTower, FormatError> {
    let f: TowerFile = serde_json::from_str(s)?;
    f.tower.to_tower()
}

pub fn instance_to_string(a: &DihedralAction, spec: Option<InstanceSpec>) -> String {
    serde_json::to_string_pretty(&InstanceJson::from_action(a, spec)).expect("serializable")
}

pub fn instance_from_str(s: &str) -> Result<DihedralAction, FormatError> {
    let i: InstanceJson = serde_json::from_str(s)?;
    i.to_action()
}

pub fn lattice_to_string(l: &Lattice) -> String {
    serde_json::to_string_pretty(&LatticeJson::from_lattice(l)).expect("serializable")
}

/// Reads a bare lattice, or the `L` of a tower file.
pub fn lattice_from_str(s: &str) -> Result<Lattice, FormatError> {
    let v: serde_json::Value = serde_json::from_str(s)?;
    if let Some(t) = v.get("tower") {
        let tj: TowerJson = serde_json::from_value(t.clone()).map_err(|e| field("tower", e))?;
        return tj.lattice.to_lattice("tower.L");
    }
    let lj: LatticeJson = serde_json::from_value(v).map_err(|e| field("lattice", e))?;
    lj.to_lattice("lattice")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::barnes_wall::construct_bw;
    use crate::testkit::{canonical, random_instance};

    #[test]
    fn tower_round_trip() {
        for d in 2..=4 {
            let t = construct_bw(d).unwrap();
            let s = tower_to_string(&t);
            let back = tower_from_str(&s).unwrap();
            assert_eq!(back.lattice(), t.lattice());
            assert_eq!(back.l1(), t.l1());
            assert_eq!(back.t(), t.t());
            assert_eq!(tower_to_string(&back), s);
        }
    }

    #[test]
    fn instance_round_trip() {
        let spec = InstanceSpec {
            seed: 3,
            n: 3,
            sublattice_depth: 2,
        };
        let a = random_instance(&spec).unwrap();
        let s = instance_to_string(&a, Some(spec));
        let b = instance_from_str(&s).unwrap();
        assert_eq!(a.lattice(), b.lattice());
        assert_eq!(a.u(), b.u());
    }

    #[test]
    fn numbers_accepted_and_strings_written() {
        let s = r#"{"frame": {"rank": 2, "gram": [[1, 0], ["0", 1]]}, "basis_num": [[1, 1], [1, -1]], "basis_log2_den": 0}"#;
        let l = lattice_from_str(s).unwrap();
        assert_eq!(l.determinant(), num_rational::BigRational::from_integer(4.into()));
        let v: serde_json::Value = serde_json::from_str(&lattice_to_string(&l)).unwrap();
        assert_eq!(v["frame"]["gram"][1][1], "1");
        assert_eq!(v["basis_log2_den"], 0);
        let m2 = canonical("M2").unwrap();
        assert!(instance_to_string(&m2, None).contains("\"maps\""));
    }

    #[test]
    fn diagnostics() {
        let bad = "{\"frame\": {\"rank\": 2,\n \"gram\": [[1, 0], [0]]}, \"basis_num\": [], \"basis_log2_den\": 0}";
        let e = lattice_from_str(bad).unwrap_err().to_string();
        assert!(e.contains("frame.gram[1]"), "{e}");
        let e = lattice_from_str("{\"frame\": \n oops}").unwrap_err();
        assert!(matches!(e, FormatError::Syntax { line: 2, .. }));
    }
}
