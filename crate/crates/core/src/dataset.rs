//! Binary classification datasets: the built-in tic-tac-toe endgame corpus,
//! the seven-feature parity toy set, CSV ingestion, and stratified splitting.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

/// Hard cap on the feature count so dense simulation stays tractable.
pub const MAX_FEATURES: usize = 20;

/// One labelled data point: `k` feature bits and `m` label bits.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DataRow {
    pub x: Vec<u8>,
    pub y: Vec<u8>,
}

/// A dataset of binary feature/label rows with consistent widths.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dataset {
    pub name: String,
    pub provenance: String,
    pub k: usize,
    pub m: usize,
    pub rows: Vec<DataRow>,
}

impl Dataset {
    pub fn new(name: &str, provenance: &str, k: usize, m: usize, rows: Vec<DataRow>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if k == 0 || k > MAX_FEATURES {
            return Err(Error::InvalidShape(format!("feature count {k} outside 1..={MAX_FEATURES}")));
        }
        if m == 0 {
            return Err(Error::InvalidShape("label count must be at least 1".into()));
        }
        for row in &rows {
            if row.x.len() != k {
                return Err(Error::WidthMismatch { expected: k, found: row.x.len() });
            }
            if row.y.len() != m {
                return Err(Error::WidthMismatch { expected: m, found: row.y.len() });
            }
            if row.x.iter().chain(row.y.iter()).any(|b| *b > 1) {
                return Err(Error::InvalidArgument("feature and label values must be bits".into()));
            }
        }
        Ok(Self { name: name.into(), provenance: provenance.into(), k, m, rows })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Per label, the value held by the majority of rows (1 on an exact tie).
    pub fn majority_labels(&self) -> Vec<u8> {
        (0..self.m)
            .map(|i| {
                let ones = self.rows.iter().filter(|r| r.y[i] == 1).count();
                u8::from(2 * ones >= self.rows.len())
            })
            .collect()
    }

    /// Deterministic stratified split: every full label combination keeps the
    /// same proportion in both halves, up to one row of rounding per class.
    pub fn stratified_split(&self, fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
        if !(fraction > 0.0 && fraction < 1.0) {
            return Err(Error::InvalidArgument(format!("split fraction {fraction} outside (0, 1)")));
        }
        let mut classes: std::collections::BTreeMap<Vec<u8>, Vec<usize>> = Default::default();
        for (i, row) in self.rows.iter().enumerate() {
            classes.entry(row.y.clone()).or_default().push(i);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut first = Vec::new();
        let mut second = Vec::new();
        for (label, mut idx) in classes {
            idx.shuffle(&mut rng);
            let take = (idx.len() as f64 * fraction).round() as usize;
            if take == 0 || take == idx.len() {
                return Err(Error::InvalidArgument(format!(
                    "class {} with {} rows cannot be split at fraction {fraction}",
                    crate::util::bits_to_string(&label),
                    idx.len()
                )));
            }
            first.extend(idx[..take].iter().map(|&i| self.rows[i].clone()));
            second.extend(idx[take..].iter().map(|&i| self.rows[i].clone()));
        }
        let a = Dataset::new(&format!("{}-train", self.name), &self.provenance, self.k, self.m, first)?;
        let b = Dataset::new(&format!("{}-test", self.name), &self.provenance, self.k, self.m, second)?;
        Ok((a, b))
    }

    /// Writes the documented CSV format: header `x1,...,xk,y1,...,ym`, one
    /// 0/1 row per data point.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let header: Vec<String> = (1..=self.k)
            .map(|i| format!("x{i}"))
            .chain((1..=self.m).map(|i| format!("y{i}")))
            .collect();
        out.push_str(&header.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> =
                row.x.iter().chain(row.y.iter()).map(|b| b.to_string()).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    /// Parses the documented CSV format.
    pub fn from_csv(name: &str, text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::Parse { line: 1, msg: "missing header".into() })?;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        let k = cols.iter().take_while(|c| c.starts_with('x')).count();
        let m = cols.len() - k;
        if k == 0 || m == 0 || !cols[k..].iter().all(|c| c.starts_with('y')) {
            return Err(Error::Parse {
                line: 1,
                msg: format!("expected header x1,...,xk,y1,...,ym, found \"{header}\""),
            });
        }
        let mut rows = Vec::new();
        for (idx, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let cells: Vec<&str> = line.split(',').map(str::trim).collect();
            if cells.len() != k + m {
                return Err(Error::Parse {
                    line: idx + 1,
                    msg: format!("expected {} cells, found {}", k + m, cells.len()),
                });
            }
            let parse_bit = |cell: &str| -> Result<u8> {
                match cell {
                    "0" => Ok(0),
                    "1" => Ok(1),
                    other => Err(Error::Parse { line: idx + 1, msg: format!("expected 0 or 1, found \"{other}\"") }),
                }
            };
            let x = cells[..k].iter().map(|c| parse_bit(c)).collect::<Result<Vec<_>>>()?;
            let y = cells[k..].iter().map(|c| parse_bit(c)).collect::<Result<Vec<_>>>()?;
            rows.push(DataRow { x, y });
        }
        Dataset::new(name, "csv import", k, m, rows)
    }
}

/// The five-point parity toy set: seven features of which only the first
/// three are informative, label = XOR over all features.
pub fn load_toy() -> Dataset {
    let x_rows: [[u8; 7]; 5] = [
        [1, 1, 0, 0, 0, 0, 0],
        [0, 1, 1, 0, 0, 0, 0],
        [0, 0, 1, 0, 0, 0, 0],
        [0, 0, 0, 0, 0, 0, 0],
        [1, 1, 1, 0, 0, 0, 0],
    ];
    let y: [u8; 5] = [0, 0, 1, 0, 1];
    let rows = x_rows
        .iter()
        .zip(y)
        .map(|(x, y)| DataRow { x: x.to_vec(), y: vec![y] })
        .collect();
    Dataset::new("toy", "built-in parity toy set", 7, 1, rows).expect("static data is valid")
}

/// Winning lines on the 3x3 board, row-major field numbering 1..=9.
const LINES: [[usize; 3]; 8] =
    [[0, 1, 2], [3, 4, 5], [6, 7, 8], [0, 3, 6], [1, 4, 7], [2, 5, 8], [0, 4, 8], [2, 4, 6]];

fn board_winner(board: &[u8; 9]) -> Option<u8> {
    for line in LINES {
        let v = board[line[0]];
        if v != 2 && board[line[1]] == v && board[line[2]] == v {
            return Some(v);
        }
    }
    None
}

/// Converts nine ternary board attributes (0 starting player, 1 other player,
/// 2 blank) into 15 feature bits: the attributes read as a base-3 number with
/// the first attribute most significant, written in binary with the first bit
/// most significant. The largest value, all blanks, is 3^9 - 1 = 19682 < 2^15.
pub fn encode_board(attrs: &[u8; 9]) -> Result<[u8; 15]> {
    let mut value: u32 = 0;
    for &a in attrs {
        if a > 2 {
            return Err(Error::InvalidArgument(format!("board attribute {a} outside 0..=2")));
        }
        value = value * 3 + u32::from(a);
    }
    let mut bits = [0u8; 15];
    for (i, bit) in bits.iter_mut().enumerate() {
        *bit = ((value >> (14 - i)) & 1) as u8;
    }
    Ok(bits)
}

/// Inverse of [`encode_board`]; rejects bit patterns above the base-3 range.
pub fn decode_board(bits: &[u8]) -> Result<[u8; 9]> {
    if bits.len() != 15 {
        return Err(Error::WidthMismatch { expected: 15, found: bits.len() });
    }
    let mut value: u32 = 0;
    for &b in bits {
        value = (value << 1) | u32::from(b);
    }
    if value > 19682 {
        return Err(Error::InvalidArgument(format!("value {value} is not a base-3 board encoding")));
    }
    let mut attrs = [0u8; 9];
    for i in (0..9).rev() {
        attrs[i] = (value % 3) as u8;
        value /= 3;
    }
    Ok(attrs)
}

/// Enumerates the complete set of legal endgame boards (starting player moves
/// first, play stops at a three-in-a-row or a full board) in lexicographic
/// attribute order. Label 1 means the starting player won.
pub fn generate_tictactoe() -> Dataset {
    let mut boards = std::collections::BTreeSet::new();
    let mut board = [2u8; 9];
    fn walk(board: &mut [u8; 9], player: u8, out: &mut std::collections::BTreeSet<[u8; 9]>) {
        let finished = board_winner(board).is_some() || board.iter().all(|&c| c != 2);
        if finished {
            out.insert(*board);
            return;
        }
        for i in 0..9 {
            if board[i] == 2 {
                board[i] = player;
                walk(board, 1 - player, out);
                board[i] = 2;
            }
        }
    }
    walk(&mut board, 0, &mut boards);
    let rows = boards
        .iter()
        .map(|b| DataRow {
            x: encode_board(b).expect("enumerated boards are ternary").to_vec(),
            y: vec![u8::from(board_winner(b) == Some(0))],
        })
        .collect();
    Dataset::new("tic-tac-toe", "built-in endgame enumeration", 15, 1, rows)
        .expect("enumeration is valid")
}

/// Renders the endgame corpus in the published attribute format: nine
/// `x`/`o`/`b` symbols and a `positive`/`negative` class, comma separated.
pub fn tictactoe_attribute_lines() -> Vec<String> {
    let mut boards = std::collections::BTreeSet::new();
    let mut board = [2u8; 9];
    fn walk(board: &mut [u8; 9], player: u8, out: &mut std::collections::BTreeSet<[u8; 9]>) {
        let finished = board_winner(board).is_some() || board.iter().all(|&c| c != 2);
        if finished {
            out.insert(*board);
            return;
        }
        for i in 0..9 {
            if board[i] == 2 {
                board[i] = player;
                walk(board, 1 - player, out);
                board[i] = 2;
            }
        }
    }
    walk(&mut board, 0, &mut boards);
    boards
        .iter()
        .map(|b| {
            let mut cells: Vec<&str> = b
                .iter()
                .map(|&a| match a {
                    0 => "x",
                    1 => "o",
                    _ => "b",
                })
                .collect();
            cells.push(if board_winner(b) == Some(0) { "positive" } else { "negative" });
            cells.join(",")
        })
        .collect()
}

/// Parses the published attribute format (`x,o,b,...,positive`).
pub fn parse_tictactoe(text: &str) -> Result<Dataset> {
    let mut rows = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != 10 {
            return Err(Error::Parse {
                line: idx + 1,
                msg: format!("expected 10 cells, found {}", cells.len()),
            });
        }
        let mut attrs = [0u8; 9];
        for (i, cell) in cells[..9].iter().enumerate() {
            attrs[i] = match *cell {
                "x" => 0,
                "o" => 1,
                "b" => 2,
                other => {
                    return Err(Error::Parse {
                        line: idx + 1,
                        msg: format!("expected x, o, or b, found \"{other}\""),
                    })
                }
            };
        }
        let label = match cells[9] {
            "positive" => 1u8,
            "negative" => 0u8,
            other => {
                return Err(Error::Parse {
                    line: idx + 1,
                    msg: format!("expected positive or negative, found \"{other}\""),
                })
            }
        };
        rows.push(DataRow { x: encode_board(&attrs)?.to_vec(), y: vec![label] });
    }
    Dataset::new("tic-tac-toe", "attribute file import", 15, 1, rows)
}

/// Reads the published attribute file from disk.
pub fn load_tictactoe(path: &std::path::Path) -> Result<Dataset> {
    parse_tictactoe(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toy_matches_the_stated_matrix() {
        let toy = load_toy();
        assert_eq!(toy.k, 7);
        assert_eq!(toy.m, 1);
        assert_eq!(toy.len(), 5);
        assert_eq!(toy.rows[2].y, vec![1]);
        assert_eq!(toy.rows[4].y, vec![1]);
        for row in &toy.rows {
            let parity = row.x.iter().fold(0u8, |a, b| a ^ b);
            assert_eq!(parity, row.y[0]);
        }
        assert_eq!(toy.majority_labels(), vec![0]);
    }

    #[test]
    fn board_encoding_examples() {
        assert_eq!(encode_board(&[0; 9]).unwrap(), [0; 15]);
        let mut one = [0u8; 9];
        one[8] = 1;
        assert_eq!(crate::util::bits_to_string(&encode_board(&one).unwrap()), "000000000000001");
        let blanks = [2u8; 9];
        assert_eq!(crate::util::bits_to_string(&encode_board(&blanks).unwrap()), "100110011100010");
        assert!(encode_board(&[3, 0, 0, 0, 0, 0, 0, 0, 0]).is_err());
    }

    #[test]
    fn board_encoding_is_injective() {
        let mut seen = std::collections::HashSet::new();
        for value in 0..19683u32 {
            let mut attrs = [0u8; 9];
            let mut v = value;
            for i in (0..9).rev() {
                attrs[i] = (v % 3) as u8;
                v /= 3;
            }
            let bits = encode_board(&attrs).unwrap();
            assert!(seen.insert(bits));
            assert_eq!(decode_board(&bits).unwrap(), attrs);
        }
    }

    #[test]
    fn endgame_corpus_counts() {
        let data = generate_tictactoe();
        assert_eq!(data.len(), 958);
        let positive = data.rows.iter().filter(|r| r.y[0] == 1).count();
        assert_eq!(positive, 626);
        assert_eq!(data.majority_labels(), vec![1]);
    }

    #[test]
    fn attribute_format_round_trip() {
        let lines = tictactoe_attribute_lines();
        assert_eq!(lines.len(), 958);
        let parsed = parse_tictactoe(&lines.join("\n")).unwrap();
        assert_eq!(parsed.rows, generate_tictactoe().rows);
        // A known winning board: starting player takes the top row.
        let text = "x,x,x,o,o,b,b,b,b,positive";
        let one = parse_tictactoe(text).unwrap();
        assert_eq!(one.rows[0].y, vec![1]);
        let attrs = decode_board(&one.rows[0].x).unwrap();
        assert_eq!(attrs, [0, 0, 0, 1, 1, 2, 2, 2, 2]);
    }

    #[test]
    fn attribute_parse_errors_carry_line_numbers() {
        let text = "x,x,x,o,o,b,b,b,b,positive\nx,x,q,o,o,b,b,b,b,negative";
        match parse_tictactoe(text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn shipped_data_file_matches_the_enumeration() {
        let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/tic-tac-toe.data");
        let loaded = load_tictactoe(&path).unwrap();
        assert_eq!(loaded.rows, generate_tictactoe().rows);
    }

    #[test]
    fn csv_round_trip() {
        let toy = load_toy();
        let csv = toy.to_csv();
        assert!(csv.starts_with("x1,x2,x3,x4,x5,x6,x7,y1\n"));
        let back = Dataset::from_csv("toy", &csv).unwrap();
        assert_eq!(back.rows, toy.rows);
        assert!(Dataset::from_csv("bad", "a,b\n0,1\n").is_err());
    }

    #[test]
    fn stratified_split_halves_the_endgame_corpus() {
        let data = generate_tictactoe();
        let (train, test) = data.stratified_split(0.5, 7).unwrap();
        assert_eq!(train.len(), 479);
        assert_eq!(test.len(), 479);
        let pos = |d: &Dataset| d.rows.iter().filter(|r| r.y[0] == 1).count();
        assert_eq!(pos(&train), 313);
        assert_eq!(pos(&test), 313);
        // Partition: together they hold exactly the original rows.
        let mut all: Vec<_> = train.rows.iter().chain(test.rows.iter()).cloned().collect();
        all.sort_by(|a, b| a.x.cmp(&b.x));
        let mut orig = data.rows.clone();
        orig.sort_by(|a, b| a.x.cmp(&b.x));
        assert_eq!(all, orig);
        // Determinism.
        let (train2, _) = data.stratified_split(0.5, 7).unwrap();
        assert_eq!(train.rows, train2.rows);
        let (train3, _) = data.stratified_split(0.5, 8).unwrap();
        assert_ne!(train.rows, train3.rows);
    }

    #[test]
    fn split_rejects_degenerate_classes() {
        let rows = vec![
            DataRow { x: vec![0], y: vec![0] },
            DataRow { x: vec![1], y: vec![0] },
            DataRow { x: vec![1], y: vec![1] },
        ];
        let data = Dataset::new("tiny", "test", 1, 1, rows).unwrap();
        assert!(data.stratified_split(0.5, 0).is_err());
    }
}
