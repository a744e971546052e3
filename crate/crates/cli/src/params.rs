//! Flat `key = value` parameter files. Blank lines and `#` comments survive a
//! read-modify-write cycle; a value may carry a standard error as `± se` (or
//! `+- se`).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Context, Result};
use storyvotes::dist::LogNormal;
use storyvotes::estimation::ClassPriors;
use storyvotes::model::{SiteModel, VoterClass};

#[derive(Debug, Clone, PartialEq)]
enum Line {
    Text(String),
    Entry {
        key: String,
        value: f64,
        std_error: Option<f64>,
        comment: Option<String>,
    },
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamFile {
    lines: Vec<Line>,
}

impl ParamFile {
    pub fn parse(text: &str, source: &str) -> Result<Self> {
        let mut lines = Vec::new();
        let mut seen = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let lineno = i + 1;
            let (body, comment) = match raw.find('#') {
                Some(p) => (&raw[..p], Some(raw[p + 1..].trim().to_string())),
                None => (raw, None),
            };
            if body.trim().is_empty() {
                lines.push(Line::Text(raw.to_string()));
                continue;
            }
            let Some((key, rest)) = body.split_once('=') else {
                bail!("{source}:{lineno}: expected `key = value`");
            };
            let key = key.trim().to_string();
            if key.is_empty() {
                bail!("{source}:{lineno}: empty key");
            }
            let rest = rest.trim().replace("+-", "±");
            let (value, se) = match rest.split_once('±') {
                Some((v, s)) => (v.trim(), Some(s.trim())),
                None => (rest.as_str(), None),
            };
            let value: f64 = value
                .parse()
                .with_context(|| format!("{source}:{lineno}: invalid value `{value}` for `{key}`"))?;
            let std_error = match se {
                Some(s) => Some(
                    s.parse::<f64>()
                        .with_context(|| format!("{source}:{lineno}: invalid standard error `{s}`"))?,
                ),
                None => None,
            };
            if let Some(prev) = seen.insert(key.clone(), lineno) {
                bail!("{source}:{lineno}: `{key}` already set on line {prev}");
            }
            lines.push(Line::Entry {
                key,
                value,
                std_error,
                comment,
            });
        }
        Ok(Self { lines })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        self.lines.iter().find_map(|l| match l {
            Line::Entry { key: k, value, .. } if k == key => Some(*value),
            _ => None,
        })
    }

    #[cfg(test)]
    pub fn std_error(&self, key: &str) -> Option<f64> {
        self.lines.iter().find_map(|l| match l {
            Line::Entry { key: k, std_error, .. } if k == key => *std_error,
            _ => None,
        })
    }

    fn require(&self, key: &str) -> Result<f64> {
        self.get(key).with_context(|| format!("parameter file lacks `{key}`"))
    }

    /// Sets a value, keeping the line's comment; a new key is appended.
    pub fn set(&mut self, key: &str, value: f64, se: Option<f64>) {
        for l in &mut self.lines {
            if let Line::Entry {
                key: k,
                value: v,
                std_error,
                ..
            } = l
            {
                if k == key {
                    *v = value;
                    *std_error = se;
                    return;
                }
            }
        }
        self.lines.push(Line::Entry {
            key: key.to_string(),
            value,
            std_error: se,
            comment: None,
        });
    }

    pub fn push_comment(&mut self, text: &str) {
        self.lines.push(Line::Text(format!("# {text}")));
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for l in &self.lines {
            match l {
                Line::Text(t) => out.push_str(t),
                Line::Entry {
                    key,
                    value,
                    std_error,
                    comment,
                } => {
                    let _ = write!(out, "{key} = {value}");
                    if let Some(se) = std_error {
                        let _ = write!(out, " ± {se}");
                    }
                    if let Some(c) = comment {
                        let _ = write!(out, "  # {c}");
                    }
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.render()).with_context(|| format!("writing {}", path.display()))
    }
}

/// Parameter keys in file order, with the comment written for a fresh file.
const SITE_KEYS: [(&str, &str); 18] = [
    ("omega", "user visit rate, per Digg hour"),
    ("users", "active users U"),
    ("mu", "law of surfing: mean pages viewed"),
    ("lambda", "law of surfing: shape"),
    ("p_other", "probability of finding a story by other means"),
    ("rho", "probability a user is a fan of a given voter"),
    ("k_upcoming", "upcoming recency list, pages per Digg hour"),
    ("k_front", "front-page recency list, pages per Digg hour"),
    ("c_submitter_fan", "upcoming visibility factor, submitter's fans"),
    ("c_other_fan", "upcoming visibility factor, other voters' fans"),
    ("c_nonfan", "upcoming visibility factor, non-fans"),
    ("front_stories_per_day", "front popularity rank: stories promoted per 24 h"),
    ("front_a", "front popularity rank: upper power-law exponent"),
    ("front_b", "front popularity rank: lower power-law exponent"),
    ("front_nu", "front popularity rank: lognormal centre"),
    ("front_sigma", "front popularity rank: lognormal spread"),
    ("upcoming_c", "upcoming popularity rank: log intercept"),
    ("upcoming_d", "upcoming popularity rank: decay per vote"),
];

fn site_values(site: &SiteModel) -> [f64; 18] {
    let g = &site.global;
    let f = &site.popularity.front;
    let u = &site.popularity.upcoming;
    [
        g.omega,
        g.users,
        g.surfing.mu,
        g.surfing.lambda,
        g.p_other,
        g.rho,
        g.k_upcoming,
        g.k_front,
        g.c_submitter_fan,
        g.c_other_fan,
        g.c_nonfan,
        f.s_daily,
        f.a,
        f.b,
        f.nu,
        f.sigma,
        u.c_exp,
        u.d_exp,
    ]
}

pub fn site_from_file(pf: &ParamFile) -> Result<SiteModel> {
    let mut site = SiteModel::reference();
    let v: Vec<f64> = SITE_KEYS.iter().map(|(k, _)| pf.require(k)).collect::<Result<_>>()?;
    {
        let g = &mut site.global;
        g.omega = v[0];
        g.users = v[1];
        g.surfing.mu = v[2];
        g.surfing.lambda = v[3];
        g.p_other = v[4];
        g.rho = v[5];
        g.k_upcoming = v[6];
        g.k_front = v[7];
        g.c_submitter_fan = v[8];
        g.c_other_fan = v[9];
        g.c_nonfan = v[10];
    }
    let f = &mut site.popularity.front;
    f.s_daily = v[11];
    f.a = v[12];
    f.b = v[13];
    f.nu = v[14];
    f.sigma = v[15];
    site.popularity.upcoming.c_exp = v[16];
    site.popularity.upcoming.d_exp = v[17];
    site.validate()?;
    Ok(site)
}

/// Writes `site` into `pf`, updating existing keys in place. A fresh file
/// gets a header and a comment per key.
pub fn site_into_file(pf: &mut ParamFile, site: &SiteModel, std_errors: &BTreeMap<String, f64>) {
    let fresh = pf.lines.is_empty();
    if fresh {
        pf.push_comment("Site-wide model parameters; times in Digg hours.");
    }
    for ((key, note), value) in SITE_KEYS.iter().zip(site_values(site)) {
        let se = std_errors.get(*key).copied();
        if fresh {
            pf.lines.push(Line::Entry {
                key: key.to_string(),
                value,
                std_error: se,
                comment: Some(note.to_string()),
            });
        } else {
            pf.set(key, value, se);
        }
    }
}

fn prior_keys(class: VoterClass) -> (String, String) {
    (format!("{}_mu", class.label()), format!("{}_sigma", class.label()))
}

pub fn priors_from_file(pf: &ParamFile) -> Result<ClassPriors> {
    let mut out = Vec::with_capacity(3);
    for class in VoterClass::ALL {
        let (m, s) = prior_keys(class);
        out.push(LogNormal::new(pf.require(&m)?, pf.require(&s)?)?);
    }
    Ok([out[0], out[1], out[2]])
}

pub fn priors_into_file(pf: &mut ParamFile, priors: &ClassPriors) {
    if pf.lines.is_empty() {
        pf.push_comment("Lognormal priors on interestingness: mean and spread of ln r per voter class.");
    }
    for class in VoterClass::ALL {
        let (m, s) = prior_keys(class);
        let p = priors[class.index()];
        pf.set(&m, p.mu_log, None);
        pf.set(&s, p.sigma_log, None);
    }
}

pub fn reference_priors() -> ClassPriors {
    [
        LogNormal { mu_log: -3.5, sigma_log: 0.8 },
        LogNormal { mu_log: -2.3, sigma_log: 0.3 },
        LogNormal { mu_log: -6.3, sigma_log: 0.6 },
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_keeps_comments_and_errors() {
        let text = "# header\n\nomega = 0.16 ± 0.01  # visits\nusers = 248000\nmu = 0.92 +- 0.04\n";
        let mut pf = ParamFile::parse(text, "t").unwrap();
        assert_eq!(pf.get("omega"), Some(0.16));
        assert_eq!(pf.std_error("omega"), Some(0.01));
        assert_eq!(pf.std_error("mu"), Some(0.04));
        pf.set("users", 1000.0, None);
        let out = pf.render();
        assert!(out.starts_with("# header\n\nomega = 0.16 ± 0.01  # visits\nusers = 1000\n"));
        assert_eq!(ParamFile::parse(&out, "t").unwrap().get("users"), Some(1000.0));
    }

    #[test]
    fn rejects_bad_lines() {
        assert!(ParamFile::parse("omega 0.16\n", "t").is_err());
        assert!(ParamFile::parse("omega = x\n", "t").is_err());
        assert!(ParamFile::parse("omega = 1\nomega = 2\n", "t").is_err());
    }

    #[test]
    fn site_round_trip() {
        let site = SiteModel::reference();
        let mut pf = ParamFile::default();
        site_into_file(&mut pf, &site, &BTreeMap::new());
        let back = site_from_file(&ParamFile::parse(&pf.render(), "t").unwrap()).unwrap();
        assert_eq!(back, site);
        let mut pr = ParamFile::default();
        priors_into_file(&mut pr, &reference_priors());
        assert_eq!(priors_from_file(&pr).unwrap(), reference_priors());
    }
}
