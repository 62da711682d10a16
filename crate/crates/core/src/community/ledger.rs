use std::io;
use std::path::Path;

use super::{Settlement, TransactionLedger};

const HEADER: [&str; 7] = ["t", "seller", "buyer", "sent_kw", "received_kw", "loss_kw", "price"];

/// One row per settlement, MGs by id.
pub fn ledger_csv_string(ledger: &TransactionLedger) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(HEADER).expect("in-memory write");
    for step in &ledger.steps {
        for s in &step.settlements {
            w.write_record([
                step.t.to_string(),
                ledger.mg_ids[s.seller].clone(),
                ledger.mg_ids[s.buyer].clone(),
                s.sent_kw.to_string(),
                s.received_kw.to_string(),
                s.loss_kw.to_string(),
                step.price.to_string(),
            ])
            .expect("in-memory write");
        }
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

pub fn write_ledger_csv(ledger: &TransactionLedger, path: &Path) -> io::Result<()> {
    std::fs::write(path, ledger_csv_string(ledger))
}

/// A ledger CSV row, with MGs resolved to indices.
#[derive(Debug, Clone, PartialEq)]
pub struct LedgerRow {
    pub t: usize,
    pub seller: usize,
    pub buyer: usize,
    pub sent_kw: f64,
    pub received_kw: f64,
    pub loss_kw: f64,
    pub price: f64,
}

impl LedgerRow {
    pub fn matches(&self, t: usize, price: f64, s: &Settlement) -> bool {
        self.t == t
            && self.seller == s.seller
            && self.buyer == s.buyer
            && self.sent_kw == s.sent_kw
            && self.received_kw == s.received_kw
            && self.loss_kw == s.loss_kw
            && self.price == price
    }
}

pub fn read_ledger_csv(path: &Path, mg_ids: &[String]) -> io::Result<Vec<LedgerRow>> {
    let bad = |msg: String| io::Error::new(io::ErrorKind::InvalidData, msg);
    let mut r = csv::Reader::from_path(path).map_err(io::Error::other)?;
    let header: Vec<String> = r.headers().map_err(io::Error::other)?.iter().map(str::to_string).collect();
    if header != HEADER {
        return Err(bad(format!("unexpected ledger header {header:?}")));
    }
    let id = |s: &str| mg_ids.iter().position(|m| m == s).ok_or_else(|| bad(format!("unknown microgrid {s}")));
    let num = |s: &str| s.parse::<f64>().map_err(|e| bad(format!("{s}: {e}")));
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(io::Error::other)?;
        rows.push(LedgerRow {
            t: rec[0].parse().map_err(|e| bad(format!("{}: {e}", &rec[0])))?,
            seller: id(&rec[1])?,
            buyer: id(&rec[2])?,
            sent_kw: num(&rec[3])?,
            received_kw: num(&rec[4])?,
            loss_kw: num(&rec[5])?,
            price: num(&rec[6])?,
        });
    }
    Ok(rows)
}
