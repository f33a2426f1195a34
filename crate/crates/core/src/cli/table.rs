/// CSV cell; floats print with 17 significant digits.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Text(String),
    Flag(bool),
    Empty,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Flag(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Num)
    }
}

pub fn format_float(v: f64) -> String {
    // -0.0 prints as 0
    let v = if v == 0.0 { 0.0 } else { v };
    format!("{v:.16e}")
}

/// Fixed-column CSV accumulated in memory.
#[derive(Debug, Clone)]
pub struct Table {
    width: usize,
    text: String,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            width: header.len(),
            text: header.join(",") + "\n",
        }
    }

    pub fn row(&mut self, cells: Vec<Cell>) {
        assert_eq!(cells.len(), self.width, "row width differs from header");
        let line: Vec<String> = cells
            .into_iter()
            .map(|c| match c {
                Cell::Num(v) => format_float(v),
                Cell::Text(s) => s,
                Cell::Flag(b) => b.to_string(),
                Cell::Empty => String::new(),
            })
            .collect();
        self.text.push_str(&line.join(","));
        self.text.push('\n');
    }

    pub fn into_string(self) -> String {
        self.text
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_precision_round_trip() {
        for v in [0.1, -2.272270082, 1.0 / 3.0, 6.02e23, f64::MIN_POSITIVE] {
            let s = format_float(v);
            assert_eq!(s.parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn rows() {
        let mut t = Table::new(&["x", "ok", "name", "opt"]);
        t.row(vec![1.5.into(), true.into(), "a".into(), None.into()]);
        assert_eq!(t.into_string(), "x,ok,name,opt\n1.5000000000000000e0,true,a,\n");
    }
}
