//! Waypoint files: one `x y` pair per line, `#` starts a comment.

use std::path::Path;

use anyhow::{bail, Context};

pub fn parse(text: &str) -> anyhow::Result<Vec<[f32; 2]>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let fields: Vec<&str> = body.split_whitespace().collect();
        if fields.len() != 2 {
            bail!("line {}: expected \"x y\", got {body:?}", i + 1);
        }
        let mut p = [0f32; 2];
        for (slot, f) in p.iter_mut().zip(&fields) {
            *slot = f.parse().with_context(|| format!("line {}: {f:?} is not a number", i + 1))?;
            if !slot.is_finite() {
                bail!("line {}: coordinate {f} is not finite", i + 1);
            }
        }
        out.push(p);
    }
    Ok(out)
}

pub fn load(path: &Path) -> anyhow::Result<Vec<[f32; 2]>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse(&text).with_context(|| format!("parsing waypoints {}", path.display()))
}
