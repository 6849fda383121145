//! Generated Java fixtures: base methods built from statement templates, and
//! the variants the resolution stages are expected to recognize.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

const VERBS: [&str; 16] = [
    "put", "get", "add", "remove", "append", "flush", "open", "read", "write", "send", "load",
    "store", "parse", "emit", "check", "merge",
];
const NOUNS: [&str; 16] = [
    "Item", "Entry", "Buffer", "Node", "Record", "Token", "Frame", "Block", "Page", "Row", "Key",
    "Value", "Chunk", "Event", "Index", "Slot",
];
const FIELDS: [&str; 6] = ["count", "total", "limit", "state", "offset", "size"];

/// Variables `$0`, `$1` are int parameters, `$2` an int array parameter,
/// `$3`, `$4` int locals and `$5` the loop variable.
const VARS: usize = 6;

#[derive(Debug, Clone, PartialEq, Eq)]
enum Stmt {
    Assign {
        a: usize,
        b: usize,
    },
    CallAssign {
        a: usize,
        b: usize,
        c: usize,
        call: String,
    },
    Call {
        a: usize,
        call: String,
    },
    Guard {
        a: usize,
        b: usize,
    },
    Loop,
    Field {
        a: usize,
        field: &'static str,
    },
    Index {
        a: usize,
        b: usize,
    },
    Grow {
        a: usize,
        b: usize,
    },
}

impl Stmt {
    fn is_call(&self) -> bool {
        matches!(self, Stmt::CallAssign { .. } | Stmt::Call { .. })
    }

    fn call_name(&self) -> Option<&str> {
        match self {
            Stmt::CallAssign { call, .. } | Stmt::Call { call, .. } => Some(call),
            _ => None,
        }
    }

    fn literal_slots(&self) -> usize {
        match self {
            Stmt::Assign { .. } | Stmt::Guard { .. } | Stmt::Loop | Stmt::Index { .. } => 1,
            _ => 0,
        }
    }
}

/// Identifier and literal choices applied when rendering a skeleton.
#[derive(Debug, Clone)]
pub struct Naming {
    pub vars: [String; VARS],
    pub literals: Vec<u32>,
}

/// A method body as a statement list, rendered with a [`Naming`].
#[derive(Debug, Clone)]
pub struct Skeleton {
    pub name: String,
    stmts: Vec<Stmt>,
}

fn local(rng: &mut impl Rng) -> usize {
    rng.random_range(0..5)
}

fn scalar(rng: &mut impl Rng) -> usize {
    [0, 1, 3, 4][rng.random_range(0..4)]
}

fn assignable(rng: &mut impl Rng) -> usize {
    [3, 4][rng.random_range(0..2)]
}

impl Skeleton {
    /// A random method with at least two call statements with distinct names.
    pub fn random(id: usize, rng: &mut impl Rng) -> Self {
        let mut calls: Vec<String> = Vec::new();
        while calls.len() < 4 {
            let c = format!(
                "{}{}{}",
                VERBS[rng.random_range(0..VERBS.len())],
                NOUNS[rng.random_range(0..NOUNS.len())],
                id % 7
            );
            if !calls.contains(&c) {
                calls.push(c);
            }
        }
        let mut stmts = vec![
            Stmt::Call {
                a: scalar(rng),
                call: calls[0].clone(),
            },
            Stmt::CallAssign {
                a: assignable(rng),
                b: scalar(rng),
                c: scalar(rng),
                call: calls[1].clone(),
            },
        ];
        let extra = rng.random_range(5..9);
        for _ in 0..extra {
            let s = match rng.random_range(0..8) {
                0 => Stmt::Assign {
                    a: assignable(rng),
                    b: scalar(rng),
                },
                1 => Stmt::CallAssign {
                    a: assignable(rng),
                    b: scalar(rng),
                    c: scalar(rng),
                    call: calls[rng.random_range(0..calls.len())].clone(),
                },
                2 => Stmt::Call {
                    a: scalar(rng),
                    call: calls[rng.random_range(0..calls.len())].clone(),
                },
                3 => Stmt::Guard {
                    a: assignable(rng),
                    b: scalar(rng),
                },
                4 => Stmt::Loop,
                5 => Stmt::Field {
                    a: scalar(rng),
                    field: FIELDS[rng.random_range(0..FIELDS.len())],
                },
                6 => Stmt::Index {
                    a: assignable(rng),
                    b: scalar(rng),
                },
                _ => Stmt::Grow {
                    a: assignable(rng),
                    b: local(rng),
                },
            };
            stmts.push(s);
        }
        stmts.shuffle(rng);
        Self {
            name: format!("compute{id}"),
            stmts,
        }
    }

    pub fn literal_count(&self) -> usize {
        2 + self.stmts.iter().map(Stmt::literal_slots).sum::<usize>()
    }

    pub fn default_naming(&self) -> Naming {
        Naming {
            vars: ["a", "b", "data", "x", "y", "i"].map(String::from),
            literals: (0..self.literal_count())
                .map(|k| 3 + 7 * k as u32)
                .collect(),
        }
    }

    /// Fresh distinct variable names and distinct literal values.
    pub fn random_naming(&self, rng: &mut impl Rng) -> Naming {
        let mut vars: Vec<String> = Vec::new();
        while vars.len() < VARS {
            let v = format!(
                "{}{}",
                ["tmp", "val", "cur", "acc", "arg", "n"][rng.random_range(0..6)],
                rng.random_range(0..1000)
            );
            if !vars.contains(&v) {
                vars.push(v);
            }
        }
        let mut pool: Vec<u32> = (100..2000).collect();
        pool.shuffle(rng);
        Naming {
            vars: vars.try_into().expect("six names"),
            literals: pool[..self.literal_count()].to_vec(),
        }
    }

    pub fn render(&self, n: &Naming) -> String {
        let v = |i: usize| n.vars[i].as_str();
        let mut lit = n.literals.iter();
        let mut next = || lit.next().expect("literal slot").to_string();
        let mut out = format!(
            "public int {}(int {}, int {}, int[] {}) {{\n    int {} = {};\n    int {} = {};\n",
            self.name,
            v(0),
            v(1),
            v(2),
            v(3),
            next(),
            v(4),
            next()
        );
        for s in &self.stmts {
            let line = match s {
                Stmt::Assign { a, b } => format!("{} = {} + {};", v(*a), v(*b), next()),
                Stmt::CallAssign { a, b, c, call } => format!("{} = {call}({}, {});", v(*a), v(*b), v(*c)),
                Stmt::Call { a, call } => format!("{call}({});", v(*a)),
                Stmt::Guard { a, b } => {
                    format!("if ({} > {}) {{\n        {} = {} - {};\n    }}", v(*a), v(*b), v(*a), v(*a), next())
                }
                Stmt::Loop => format!(
                    "for (int {i} = {}; {i} < {}.length; {i}++) {{\n        {} = {} + {}[{i}];\n    }}",
                    next(),
                    v(2),
                    v(3),
                    v(3),
                    v(2),
                    i = v(5)
                ),
                Stmt::Field { a, field } => format!("this.{field} = {};", v(*a)),
                Stmt::Index { a, b } => format!("{} = {}[{} % {}];", v(*a), v(2), v(*b), next()),
                Stmt::Grow { a, b } => format!("{} += {};", v(*a), v(*b)),
            };
            out.push_str("    ");
            out.push_str(&line);
            out.push('\n');
        }
        out.push_str(&format!("    return {} + {};\n}}\n", v(3), v(4)));
        out
    }

    pub fn source(&self) -> String {
        self.render(&self.default_naming())
    }

    /// Indices of call statements, for [`Skeleton::swap`].
    pub fn call_positions(&self) -> Vec<usize> {
        (0..self.stmts.len())
            .filter(|&i| self.stmts[i].is_call())
            .collect()
    }

    /// Pairs of call statements with different callees.
    pub fn swappable_calls(&self) -> Vec<(usize, usize)> {
        let calls = self.call_positions();
        let mut out = Vec::new();
        for (x, &i) in calls.iter().enumerate() {
            for &j in &calls[x + 1..] {
                if self.stmts[i].call_name() != self.stmts[j].call_name() {
                    out.push((i, j));
                }
            }
        }
        out
    }

    pub fn swap(&self, i: usize, j: usize) -> Self {
        let mut s = self.clone();
        s.stmts.swap(i, j);
        s
    }

    /// Inserts an arithmetic statement with no Action tokens at `at`.
    pub fn with_extra_statement(&self, at: usize) -> Self {
        let mut s = self.clone();
        s.stmts
            .insert(at.min(s.stmts.len()), Stmt::Grow { a: 3, b: 1 });
        s
    }

    pub fn statement_count(&self) -> usize {
        self.stmts.len()
    }

    /// Same Action tokens, much larger control structure.
    pub fn decoy(&self, name: String) -> Self {
        let mut stmts = Vec::new();
        for s in &self.stmts {
            stmts.push(s.clone());
            if !s.is_call() {
                continue;
            }
            for k in 0..4 {
                stmts.push(Stmt::Guard {
                    a: 3 + k % 2,
                    b: k % 2,
                });
                stmts.push(Stmt::Grow { a: 4 - k % 2, b: k });
            }
        }
        Self { name, stmts }
    }
}

/// Rewrites every whitespace run and sprinkles comments, leaving tokens intact.
/// The input must not contain string or character literals.
pub fn perturb_layout(source: &str, rng: &mut impl Rng) -> String {
    const GAPS: [&str; 8] = [
        " ",
        "  ",
        "\n",
        "\n\t\t",
        "\t",
        "\n\n    ",
        " /* note */ ",
        "  // remark\n",
    ];
    let mut out = String::new();
    if rng.random_bool(0.5) {
        out.push_str("/** Generated variant. */\n");
    }
    let mut chars = source.chars().peekable();
    while let Some(c) = chars.next() {
        if c.is_whitespace() {
            while chars.peek().is_some_and(|c| c.is_whitespace()) {
                chars.next();
            }
            out.push_str(GAPS[rng.random_range(0..GAPS.len())]);
        } else {
            out.push(c);
            if matches!(c, ';' | '{' | '(' | ',') && rng.random_bool(0.2) {
                out.push_str(GAPS[rng.random_range(0..GAPS.len())]);
            }
        }
    }
    out
}

/// Location of a method written by [`CorpusBuilder`].
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Span {
    pub folder: String,
    pub file: String,
    pub start_line: usize,
    pub end_line: usize,
}

impl Span {
    pub fn csv_fields(&self) -> String {
        format!(
            "{},{},{},{}",
            self.folder, self.file, self.start_line, self.end_line
        )
    }
}

/// One pair row of the eight-column upload format.
pub fn pair_row(a: &Span, b: &Span) -> String {
    format!("{},{}", a.csv_fields(), b.csv_fields())
}

/// Writes one class per file, one method per class, under a corpus root.
pub struct CorpusBuilder {
    root: PathBuf,
    next: usize,
}

impl CorpusBuilder {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self {
            root: root.into(),
            next: 0,
        }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn add(&mut self, folder: &str, method: &str) -> io::Result<Span> {
        self.next += 1;
        let class = format!("Fixture{}", self.next);
        let file = format!("{class}.java");
        let dir = self.root.join(folder);
        fs::create_dir_all(&dir)?;
        let text = format!(
            "public class {class} {{\n{}}}\n",
            method.trim_end_matches('\n').to_string() + "\n"
        );
        fs::write(dir.join(&file), text)?;
        let lines: Vec<&str> = method.trim_end_matches('\n').lines().collect();
        let leading = lines
            .iter()
            .take_while(|l| {
                let t = l.trim_start();
                t.is_empty() || t.starts_with("/*") || t.starts_with("//") || t.starts_with('*')
            })
            .count();
        Ok(Span {
            folder: folder.into(),
            file,
            start_line: 2 + leading,
            end_line: 1 + lines.len(),
        })
    }
}
