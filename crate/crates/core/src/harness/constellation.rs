use serde::{Deserialize, Serialize};

use crate::model::{ChannelGain, Codebook};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PointKind {
    Codebook,
    Received,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstellationPoint {
    pub kind: PointKind,
    /// Symbol of each colliding user (codebook points) or the frame index (received points).
    pub label: String,
    pub re: f64,
    pub im: f64,
}

/// All superposition points of the users occupying `resource`, followed by
/// the raw samples of `received` (row-major `frames × 2K`) on that resource.
pub fn constellation_projection(
    codebook: &Codebook,
    gains: &ChannelGain,
    resource: usize,
    received: Option<&[f64]>,
) -> Result<Vec<ConstellationPoint>> {
    let k = codebook.resources();
    if resource >= k {
        return Err(Error::InvalidArgument(format!("resource {resource} out of range 0..{k}")));
    }
    let users = codebook.factor_graph().users_on(resource);
    let m = codebook.codebook_size();
    let (g_re, g_im) = (gains.get(2 * resource), gains.get(2 * resource + 1));
    let combos = m.pow(users.len() as u32);
    let mut points = Vec::with_capacity(combos);
    let mut syms = vec![0usize; users.len()];
    for c in 0..combos {
        let mut rem = c;
        for s in syms.iter_mut().rev() {
            *s = rem % m;
            rem /= m;
        }
        let (mut re, mut im) = (0.0, 0.0);
        for (&u, &s) in users.iter().zip(&syms) {
            let z = codebook.user(u).codeword(s)[resource];
            re += g_re * z.re;
            im += g_im * z.im;
        }
        let label = users
            .iter()
            .zip(&syms)
            .map(|(u, s)| format!("u{u}={s}"))
            .collect::<Vec<_>>()
            .join(" ");
        points.push(ConstellationPoint {
            kind: PointKind::Codebook,
            label,
            re,
            im,
        });
    }
    if let Some(rx) = received {
        let w = 2 * k;
        if rx.len() % w != 0 {
            return Err(Error::InvalidArgument(format!("received samples are not a multiple of 2K={w}")));
        }
        for (f, frame) in rx.chunks_exact(w).enumerate() {
            points.push(ConstellationPoint {
                kind: PointKind::Received,
                label: f.to_string(),
                re: frame[2 * resource],
                im: frame[2 * resource + 1],
            });
        }
    }
    Ok(points)
}

pub fn constellation_csv(points: &[ConstellationPoint]) -> String {
    let mut out = String::from("kind,label,re,im\n");
    for p in points {
        let kind = match p.kind {
            PointKind::Codebook => "codebook",
            PointKind::Received => "received",
        };
        out.push_str(&format!("{kind},{},{},{}\n", p.label, p.re, p.im));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn canonical_resource_has_64_points() {
        let cb = Codebook::reference();
        for k in 0..4 {
            let pts = constellation_projection(&cb, &ChannelGain::ones(4), k, None).unwrap();
            assert_eq!(pts.len(), 64);
            assert!(pts.iter().all(|p| p.kind == PointKind::Codebook));
        }
        assert!(constellation_projection(&cb, &ChannelGain::ones(4), 4, None).is_err());
    }

    #[test]
    fn lone_user_gives_its_four_codewords() {
        let c = |re, im| Complex64::new(re, im);
        let z = c(0.0, 0.0);
        let cb = Codebook::new(
            2,
            vec![
                (vec![0], vec![vec![c(1.0, 0.0), z], vec![c(0.0, 1.0), z], vec![c(-1.0, 0.0), z], vec![c(0.0, -1.0), z]]),
                (vec![1], vec![vec![z, c(1.0, 1.0)], vec![z, c(1.0, -1.0)], vec![z, c(-1.0, 1.0)], vec![z, c(-1.0, -1.0)]]),
            ],
        )
        .unwrap();
        let pts = constellation_projection(&cb, &ChannelGain::ones(2), 0, Some(&[0.5, 0.25, 9.0, 9.0])).unwrap();
        assert_eq!(pts.len(), 5);
        assert_eq!((pts[1].re, pts[1].im), (0.0, 1.0));
        assert_eq!((pts[4].kind, pts[4].re, pts[4].im), (PointKind::Received, 0.5, 0.25));
        let csv = constellation_csv(&pts);
        assert!(csv.starts_with("kind,label,re,im\ncodebook,u0=0,1,0\n"));
        let empty = constellation_projection(&cb, &ChannelGain::ones(2), 1, Some(&[])).unwrap();
        assert_eq!(empty.len(), 4);
    }
}
