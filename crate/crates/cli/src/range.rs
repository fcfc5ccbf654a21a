//! Numeric arguments: `A:B:n` ranges whose endpoints may use `pi`, e.g.
//! `pi/2:pi-0.01:64`.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Range {
    pub start: f64,
    pub end: f64,
    pub count: usize,
}

impl Range {
    pub fn parse(text: &str) -> Result<Self, String> {
        let parts: Vec<&str> = text.split(':').collect();
        let [a, b, n] = parts.as_slice() else {
            return Err(format!("expected A:B:n, got '{text}'"));
        };
        let count: usize = n.trim().parse().map_err(|_| format!("bad point count '{n}'"))?;
        if count == 0 {
            return Err("range is empty (n = 0)".into());
        }
        let (start, end) = (eval(a)?, eval(b)?);
        if start > end {
            return Err(format!("range is empty ({start} > {end})"));
        }
        if count == 1 && start != end {
            return Err("a single-point range needs A = B".into());
        }
        Ok(Self { start, end, count })
    }

    pub fn scaled(self, factor: f64) -> Self {
        Self {
            start: self.start * factor,
            end: self.end * factor,
            count: self.count,
        }
    }

    pub fn points(&self) -> Vec<f64> {
        nc2ent::gcnot::linspace(self.start, self.end, self.count)
    }
}

/// Arithmetic expression with `pi`, e.g. `2*pi/3`.
pub fn eval(text: &str) -> Result<f64, String> {
    let v = meval::eval_str(text).map_err(|e| format!("'{text}': {e}"))?;
    if !v.is_finite() {
        return Err(format!("'{text}' is not finite"));
    }
    Ok(v)
}
