//! Wire formats.
//!
//! Laws serialize through template coordinates, which are
//! basis-independent: `{"d": int, "atoms": [{"w": w, "a": [a_1..a_d]}]}`.
//! Channels serialize as row-major matrices
//! `{"d": int, "K": int, "rows": [[..]; d]}` and can also be read from
//! CSV with one row per input symbol. Fibers mirror the law schema plus
//! the base point (in the same length-d affine chart `1 + Hv`) and the
//! lost mass. Divergence profiles emit CSV with a JSON comment header.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::channel::Channel;
use crate::error::{Error, Result};
use crate::projective::Fiber;
use crate::scalar::Scalar;
use crate::shuffle::DivergenceProfile;
use crate::simplex::{AnchoredLaw, Atom, SimplexBasis, Template};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AtomJson {
    pub w: f64,
    pub a: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LawJson {
    pub d: usize,
    pub atoms: Vec<AtomJson>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChannelJson {
    pub d: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub rows: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FiberJson {
    pub d: usize,
    pub atoms: Vec<AtomJson>,
    /// Base point in the affine chart `1 + Hh` (length d, sums to d).
    pub h: Vec<f64>,
    pub lost_mass: f64,
}

pub fn law_to_json<T: Scalar>(law: &AnchoredLaw<T>) -> LawJson {
    LawJson {
        d: law.d(),
        atoms: law
            .atoms()
            .iter()
            .enumerate()
            .map(|(i, a)| AtomJson {
                w: a.weight.to_f64().unwrap(),
                a: law
                    .template(i)
                    .coords()
                    .iter()
                    .map(|v| v.to_f64().unwrap())
                    .collect(),
            })
            .collect(),
    }
}

pub fn law_from_json<T: Scalar>(json: &LawJson) -> Result<AnchoredLaw<T>> {
    let basis = SimplexBasis::<T>::new(json.d)?;
    let atoms = json
        .atoms
        .iter()
        .map(|a| {
            let coords: Vec<T> = a.a.iter().map(|&v| T::of(v)).collect();
            let template = Template::new(coords)?;
            Ok((T::of(a.w), template))
        })
        .collect::<Result<Vec<_>>>()?;
    AnchoredLaw::from_template_atoms(basis, atoms)
}

pub fn channel_to_json<T: Scalar>(channel: &Channel<T>) -> ChannelJson {
    ChannelJson {
        d: channel.d(),
        k: channel.k(),
        rows: channel
            .rows()
            .iter()
            .map(|r| r.iter().map(|v| v.to_f64().unwrap()).collect())
            .collect(),
    }
}

pub fn channel_from_json<T: Scalar>(json: &ChannelJson) -> Result<Channel<T>> {
    if json.rows.len() != json.d {
        return Err(Error::InvalidChannel(format!(
            "d = {} but {} rows",
            json.d,
            json.rows.len()
        )));
    }
    if json.rows.iter().any(|r| r.len() != json.k) {
        return Err(Error::InvalidChannel("row length differs from K".into()));
    }
    Channel::new(
        json.rows
            .iter()
            .map(|r| r.iter().map(|&v| T::of(v)).collect())
            .collect(),
    )
}

pub fn fiber_to_json<T: Scalar>(fiber: &Fiber<T>) -> FiberJson {
    let basis = fiber.basis();
    FiberJson {
        d: basis.d(),
        atoms: fiber
            .atoms()
            .iter()
            .map(|a| AtomJson {
                w: a.weight.to_f64().unwrap(),
                a: basis
                    .chart(&a.point)
                    .iter()
                    .map(|v| v.to_f64().unwrap())
                    .collect(),
            })
            .collect(),
        h: basis
            .chart(fiber.base())
            .iter()
            .map(|v| v.to_f64().unwrap())
            .collect(),
        lost_mass: fiber.lost_mass().to_f64().unwrap(),
    }
}

pub fn fiber_from_json<T: Scalar>(json: &FiberJson) -> Result<Fiber<T>> {
    let basis = SimplexBasis::<T>::new(json.d)?;
    let decode = |c: &[f64]| -> Vec<T> {
        let coords: Vec<T> = c.iter().map(|&v| T::of(v)).collect();
        basis.unchart(&coords)
    };
    let base = decode(&json.h);
    let atoms = json
        .atoms
        .iter()
        .map(|a| Atom::new(T::of(a.w), decode(&a.a)))
        .collect();
    Fiber::new(basis, base, atoms, T::of(json.lost_mass))
}

/// Reads a channel from CSV text: one row per input symbol, numeric
/// cells, optional header line (skipped when non-numeric).
pub fn channel_from_csv<T: Scalar>(reader: impl Read) -> Result<Channel<T>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let mut rows: Vec<Vec<T>> = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| Error::InvalidChannel(format!("csv: {e}")))?;
        if record.is_empty() {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> =
            record.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(vals) => rows.push(vals.into_iter().map(T::of).collect()),
            Err(_) if rows.is_empty() => continue, // header line
            Err(e) => return Err(Error::InvalidChannel(format!("csv cell: {e}"))),
        }
    }
    Channel::new(rows)
}

pub fn channel_to_csv<T: Scalar>(channel: &Channel<T>, mut out: impl Write) -> Result<()> {
    for row in channel.rows() {
        let line: Vec<String> = row.iter().map(|v| format!("{}", v.to_f64().unwrap())).collect();
        writeln!(out, "{}", line.join(","))
            .map_err(|e| Error::InvalidParameter(format!("io: {e}")))?;
    }
    Ok(())
}

/// Metadata carried in the profile CSV comment header.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProfileHeader {
    pub eps0: f64,
    pub n: usize,
    pub kl: f64,
    pub chi2: f64,
    pub tv: f64,
}

/// Emits `alpha,forward,reverse` rows preceded by a `# {json}` header.
pub fn profile_to_csv<T: Scalar>(
    profile: &DivergenceProfile<T>,
    eps0: T,
    n: usize,
    mut out: impl Write,
) -> Result<()> {
    let header = ProfileHeader {
        eps0: eps0.to_f64().unwrap(),
        n,
        kl: profile.kl.to_f64().unwrap(),
        chi2: profile.chi2.to_f64().unwrap(),
        tv: profile.tv.to_f64().unwrap(),
    };
    let io_err = |e: std::io::Error| Error::InvalidParameter(format!("io: {e}"));
    writeln!(
        out,
        "# {}",
        serde_json::to_string(&header).expect("header serializes")
    )
    .map_err(io_err)?;
    writeln!(out, "alpha,forward,reverse").map_err(io_err)?;
    for (k, &alpha) in profile.alphas.iter().enumerate() {
        writeln!(
            out,
            "{},{},{}",
            alpha.to_f64().unwrap(),
            profile.forward[k].to_f64().unwrap(),
            profile.reverse[k].to_f64().unwrap()
        )
        .map_err(io_err)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::anchor;
    use crate::projective::fiber;

    #[test]
    fn law_json_round_trip() {
        let law = anchor(&Channel::<f64>::brr(1.0)).unwrap();
        let json = law_to_json(&law);
        let text = serde_json::to_string(&json).unwrap();
        let parsed: LawJson = serde_json::from_str(&text).unwrap();
        let back = law_from_json::<f64>(&parsed).unwrap();
        assert!(law.max_atom_distance(&back) < 1e-12);
    }

    #[test]
    fn channel_json_schema_fields() {
        let channel = Channel::<f64>::brr(1.0);
        let text = serde_json::to_string(&channel_to_json(&channel)).unwrap();
        assert!(text.contains("\"d\":2"));
        assert!(text.contains("\"K\":2"));
        assert!(text.contains("\"rows\""));
        let parsed: ChannelJson = serde_json::from_str(&text).unwrap();
        let back = channel_from_json::<f64>(&parsed).unwrap();
        for i in 0..2 {
            for y in 0..2 {
                assert!((back.row(i)[y] - channel.row(i)[y]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn fiber_json_round_trip() {
        let law = anchor(
            &Channel::<f64>::new(vec![
                vec![0.5, 0.3, 0.2],
                vec![0.1, 0.6, 0.3],
                vec![0.25, 0.25, 0.5],
            ])
            .unwrap(),
        )
        .unwrap();
        let h = law.basis().composition_base(&[0.4, 0.3, 0.3]).unwrap();
        let f = fiber(&law, &h).unwrap();
        let json = fiber_to_json(&f);
        let back = fiber_from_json::<f64>(&json).unwrap();
        assert!(f.max_atom_distance(&back) < 1e-12);
    }

    #[test]
    fn channel_csv_round_trip_with_header() {
        let text = "y1,y2\n0.75,0.25\n0.25,0.75\n";
        let channel = channel_from_csv::<f64>(text.as_bytes()).unwrap();
        assert_eq!(channel.d(), 2);
        assert!((channel.row(0)[0] - 0.75).abs() < 1e-15);
        let mut out = Vec::new();
        channel_to_csv(&channel, &mut out).unwrap();
        let again = channel_from_csv::<f64>(out.as_slice()).unwrap();
        assert!((again.row(1)[1] - 0.75).abs() < 1e-15);
    }

    #[test]
    fn csv_rejects_bad_rows() {
        assert!(channel_from_csv::<f64>("0.9,0.2\n0.5,0.5\n".as_bytes()).is_err());
    }

    #[test]
    fn profile_csv_layout() {
        let env = crate::shuffle::envelope(1.0f64, 2, &[1.0, 2.0]).unwrap();
        let mut out = Vec::new();
        profile_to_csv(&env, 1.0, 2, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let mut lines = text.lines();
        assert!(lines.next().unwrap().starts_with("# {"));
        assert_eq!(lines.next().unwrap(), "alpha,forward,reverse");
        assert_eq!(lines.count(), 2);
    }
}
