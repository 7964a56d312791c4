use std::fmt::Write;

/// 17 significant digits, so every value round-trips exactly.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// A CSV table held in memory until the run succeeds.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Table { name: name.into(), header: header.iter().map(|s| s.to_string()).collect(), rows: vec![] }
    }

    pub fn with_header(name: &str, header: Vec<String>) -> Self {
        Table { name: name.into(), header, rows: vec![] }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn push_nums(&mut self, row: &[f64]) {
        self.push(row.iter().map(|v| num(*v)).collect());
    }

    pub fn render(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for r in &self.rows {
            let _ = writeln!(s, "{}", r.join(","));
        }
        s
    }
}
