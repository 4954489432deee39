//! Run reports: a human-readable text view and a TOML document whose only
//! run-dependent content is the `[header]` table.

use toml::{Table, Value};

pub const SCHEMA_VERSION: i64 = 1;

pub fn floats(v: &[f64]) -> Value {
    Value::Array(v.iter().map(|&x| Value::Float(x)).collect())
}

pub fn ints<T: Copy + Into<i64>>(v: &[T]) -> Value {
    Value::Array(v.iter().map(|&x| Value::Integer(x.into())).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Header {
    pub command: String,
    pub args: Vec<String>,
    pub seed: u64,
    pub elapsed_ms: u128,
}

impl Header {
    fn table(&self) -> Table {
        let mut t = Table::new();
        t.insert("tool".into(), Value::String("jpdlab".into()));
        t.insert("version".into(), Value::String(env!("CARGO_PKG_VERSION").into()));
        t.insert("schema".into(), Value::Integer(SCHEMA_VERSION));
        t.insert("command".into(), Value::String(self.command.clone()));
        t.insert(
            "args".into(),
            Value::Array(self.args.iter().cloned().map(Value::String).collect()),
        );
        // Seeds are u64; TOML integers are i64, so store the bit pattern as text.
        t.insert("seed".into(), Value::String(self.seed.to_string()));
        t.insert("elapsed_ms".into(), Value::Integer(self.elapsed_ms as i64));
        t
    }
}

/// Body of a report plus its text rendering.
#[derive(Debug, Clone, Default)]
pub struct Report {
    body: Table,
    pub text: String,
    /// Internal checks that did not hold; any entry maps to exit status 4.
    pub failures: Vec<String>,
}

impl Report {
    pub fn section(&mut self, name: &str) -> &mut Table {
        self.body
            .entry(name)
            .or_insert_with(|| Value::Table(Table::new()))
            .as_table_mut()
            .expect("sections are tables")
    }

    pub fn push_row(&mut self, name: &str, row: Table) {
        let arr = self
            .body
            .entry(name)
            .or_insert_with(|| Value::Array(Vec::new()))
            .as_array_mut()
            .expect("row lists are arrays");
        arr.push(Value::Table(row));
    }

    pub fn line(&mut self, s: impl AsRef<str>) {
        self.text.push_str(s.as_ref());
        self.text.push('\n');
    }

    pub fn body(&self) -> &Table {
        &self.body
    }

    pub fn structured(&self, header: &Header) -> String {
        let mut head = Table::new();
        head.insert("header".into(), Value::Table(header.table()));
        let mut out = toml::to_string(&head).expect("header serializes");
        out.push('\n');
        out.push_str(&toml::to_string(&self.body).expect("report body serializes"));
        out
    }
}

/// Build a table from `(key, value)` pairs.
pub fn table<const N: usize>(entries: [(&str, Value); N]) -> Table {
    entries.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}
