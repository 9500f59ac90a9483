//! Spreadsheet-style oracle for the 12-post fixture. Every value it uses is
//! taken from the table below, not from the library.

use std::collections::BTreeMap;

use engage_core::aggregate::Polarity;

pub const TOL: f64 = 1e-9;

struct Post {
    id: &'static str,
    parent: Option<&'static str>,
    ups: u64,
    downs: u64,
    controversial: bool,
    edited: bool,
    /// Non-stopword tokens in the body, counted by hand.
    specificity: u32,
    emotion: f64,
    /// False for the toxic and quoted posts.
    kept: bool,
}

#[allow(clippy::too_many_arguments)]
const fn p(
    id: &'static str,
    parent: Option<&'static str>,
    ups: u64,
    downs: u64,
    controversial: bool,
    edited: bool,
    specificity: u32,
    emotion: f64,
    kept: bool,
) -> Post {
    Post {
        id,
        parent,
        ups,
        downs,
        controversial,
        edited,
        specificity,
        emotion,
        kept,
    }
}

const POSTS: [Post; 12] = [
    p("r", None, 10, 0, false, false, 5, 0.1, true),
    p("a", Some("r"), 8, 1, false, false, 5, 0.2, true),
    p("b", Some("r"), 3, 0, true, false, 5, 0.3, true),
    p("c", Some("a"), 5, 0, false, true, 4, 0.8, true),
    p("d", Some("a"), 2, 4, false, false, 3, 0.1, true),
    p("e", Some("a"), 1, 0, false, false, 1, 0.05, false),
    p("f", Some("b"), 4, 0, false, false, 3, 0.5, false),
    p("g", Some("c"), 1, 0, false, false, 3, 0.6, true),
    p("h", Some("d"), 0, 0, false, false, 1, 0.0, true),
    p("i", Some("d"), 6, 0, false, true, 6, 0.9, true),
    p("j", Some("g"), 2, 0, false, false, 2, 0.4, true),
    p("l", Some("b"), 3, 0, false, false, 4, 0.7, true),
];

#[derive(Debug, Clone, Copy)]
pub struct OracleRow {
    pub pv: f64,
    pub re: f64,
    pub be: f64,
    pub ae: f64,
    pub ee: f64,
    pub pvre: f64,
    pub pvbe: f64,
    pub n_re: f64,
    pub n_ae: f64,
    pub n_be: f64,
    pub endex: f64,
    pub z: f64,
    pub polarity: Polarity,
}

pub struct Oracle {
    pub rows: BTreeMap<&'static str, OracleRow>,
    pub m_pv: f64,
    pub m_re: f64,
    pub m_be: f64,
    pub mean: f64,
    pub std: f64,
}

fn lower_median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v[(v.len() - 1) / 2]
}

pub fn oracle() -> Oracle {
    let post = |id: &str| POSTS.iter().find(|p| p.id == id).unwrap();
    let kept_children =
        |id: &str| -> Vec<&Post> { POSTS.iter().filter(|c| c.kept && c.parent == Some(id)).collect() };
    let pairs: Vec<&Post> = POSTS
        .iter()
        .filter(|q| q.kept && q.parent.is_some_and(|par| post(par).kept))
        .collect();

    // (id, pv, re, be, ae, ee)
    let raw: Vec<_> = pairs
        .iter()
        .map(|q| {
            let parent = post(q.parent.unwrap());
            let pv = 2.0 * kept_children(parent.id).len() as f64 + parent.ups as f64;
            let replies = kept_children(q.id);
            let re = replies.len() as f64;
            let be = if q.controversial {
                0.0
            } else {
                (q.ups as f64 - q.downs as f64).max(0.0)
            };
            let t = replies.iter().map(|r| r.specificity).max().unwrap_or(0) as f64;
            let e = replies.iter().filter(|r| r.edited).count() as f64;
            let ae = t + 10.0 * e;
            let ee = if replies.is_empty() {
                0.0
            } else {
                replies.iter().map(|r| r.emotion).sum::<f64>() / re
            };
            (q.id, pv, re, be, ae, ee)
        })
        .collect();

    let m_pv = lower_median(raw.iter().map(|r| r.1).collect());
    let m_re = lower_median(raw.iter().map(|r| r.2).collect());
    let m_be = lower_median(raw.iter().map(|r| r.3).collect());

    let adjust = |x: f64, pv: f64, m: f64| x + (m_pv / m) * (x / pv.max(1.0)) * x;
    let mut rows = BTreeMap::new();
    for &(id, pv, re, be, ae, ee) in &raw {
        let pvre = adjust(re, pv, m_re);
        let pvbe = adjust(be, pv, m_be);
        let n_re = pvre / (pvre + 1.0);
        let n_be = pvbe / (pvbe + 2.0);
        let n_ae = ae / (ae + 18.0);
        let endex = (3.0 * n_re + 3.0 * n_ae + 2.0 * ee + 1.0 * n_be) / 9.0;
        rows.insert(
            id,
            OracleRow {
                pv,
                re,
                be,
                ae,
                ee,
                pvre,
                pvbe,
                n_re,
                n_ae,
                n_be,
                endex,
                z: 0.0,
                polarity: Polarity::Discarded,
            },
        );
    }
    let n = rows.len() as f64;
    let mean = rows.values().map(|r| r.endex).sum::<f64>() / n;
    let std = (rows.values().map(|r| (r.endex - mean).powi(2)).sum::<f64>() / n).sqrt();
    for r in rows.values_mut() {
        r.z = (r.endex - mean) / std;
        r.polarity = if r.z > 1.0 {
            Polarity::Positive
        } else if r.z < -1.0 {
            Polarity::Negative
        } else {
            Polarity::Discarded
        };
    }
    Oracle {
        rows,
        m_pv,
        m_re,
        m_be,
        mean,
        std,
    }
}
