//! Per-coordinate weight sequences given as expressions in `s`, e.g. `1/s`
//! or `(sqrt3/pi)^s`.

use anyhow::{anyhow, Context as _, Result};
use evalexpr::{eval_number_with_context, ContextWithMutableVariables, DefaultNumericTypes, HashMapContext, Value};

/// Rewrites the shorthand `sqrtN` to `math::sqrt(N)` and `sqrt(` to
/// `math::sqrt(`.
fn expand(expr: &str) -> String {
    let mut out = String::with_capacity(expr.len() + 16);
    let mut rest = expr;
    while let Some(i) = rest.find("sqrt") {
        out.push_str(&rest[..i]);
        let after = &rest[i + 4..];
        let digits = after
            .char_indices()
            .take_while(|(_, c)| c.is_ascii_digit() || *c == '.')
            .last()
            .map_or(0, |(j, c)| j + c.len_utf8());
        if digits > 0 {
            out.push_str(&format!("math::sqrt({})", &after[..digits]));
            rest = &after[digits..];
        } else {
            out.push_str("math::sqrt");
            rest = after;
        }
    }
    out.push_str(rest);
    out
}

/// Values of `expr` at `s = 1, …, d`.
pub fn sequence(expr: &str, d: usize) -> Result<Vec<f64>> {
    let expanded = expand(expr);
    let mut ctx = HashMapContext::<DefaultNumericTypes>::new();
    ctx.set_value("pi".into(), Value::Float(std::f64::consts::PI))
        .map_err(|e| anyhow!("{e}"))?;
    (1..=d)
        .map(|s| {
            ctx.set_value("s".into(), Value::Float(s as f64))
                .map_err(|e| anyhow!("{e}"))?;
            eval_number_with_context(&expanded, &ctx)
                .map_err(|e| anyhow!("{e}"))
                .with_context(|| format!("cannot evaluate `{expr}` at s = {s}"))
        })
        .collect()
}
