//! Target glyph sets.
//!
//! On disk a target set is a directory holding `manifest.txt` (one character
//! per line, in evaluation order) and one plain PGM (`P2`) per character named
//! `<CHAR>.pgm`. Dark samples are ink.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::raster::Canvas;

pub const MANIFEST: &str = "manifest.txt";

/// The reference glyphs `G`, one canvas per character.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetSet {
    characters: Vec<char>,
    bitmaps: BTreeMap<char, Canvas>,
    canvas_size: usize,
}

impl TargetSet {
    pub fn new(entries: Vec<(char, Canvas)>) -> Result<Self> {
        let Some(size) = entries.first().map(|(_, c)| c.size()) else {
            return Err(Error::Targets("target set is empty".into()));
        };
        let mut characters = Vec::with_capacity(entries.len());
        let mut bitmaps = BTreeMap::new();
        for (ch, canvas) in entries {
            if canvas.size() != size {
                return Err(Error::Targets(format!(
                    "glyph {ch:?} is {0}x{0} but the set is {size}x{size}",
                    canvas.size()
                )));
            }
            if bitmaps.insert(ch, canvas).is_some() {
                return Err(Error::Targets(format!("character {ch:?} listed twice")));
            }
            characters.push(ch);
        }
        Ok(TargetSet {
            characters,
            bitmaps,
            canvas_size: size,
        })
    }

    pub fn characters(&self) -> &[char] {
        &self.characters
    }

    pub fn canvas_size(&self) -> usize {
        self.canvas_size
    }

    pub fn len(&self) -> usize {
        self.characters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.characters.is_empty()
    }

    pub fn contains(&self, ch: char) -> bool {
        self.bitmaps.contains_key(&ch)
    }

    pub fn get(&self, ch: char) -> Option<&Canvas> {
        self.bitmaps.get(&ch)
    }

    /// Glyphs in manifest order.
    pub fn iter(&self) -> impl Iterator<Item = (char, &Canvas)> + '_ {
        self.characters.iter().map(move |c| (*c, &self.bitmaps[c]))
    }

    /// Restricts the set to `chars`, preserving manifest order.
    pub fn subset(&self, chars: &[char]) -> Result<TargetSet> {
        for c in chars {
            if !self.contains(*c) {
                return Err(Error::Targets(format!("character {c:?} not in target set")));
            }
        }
        TargetSet::new(
            self.iter()
                .filter(|(c, _)| chars.contains(c))
                .map(|(c, canvas)| (c, canvas.clone()))
                .collect(),
        )
    }

    /// Writes the set in the directory layout read by [`load_targets`].
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let manifest: String = self.characters.iter().map(|c| format!("{c}\n")).collect();
        let path = dir.join(MANIFEST);
        fs::write(&path, manifest).map_err(|e| Error::io(&path, e))?;
        for (ch, canvas) in self.iter() {
            let path = dir.join(format!("{ch}.pgm"));
            fs::write(&path, encode_pgm(canvas)).map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }
}

/// Loads `manifest.txt` and every `<CHAR>.pgm` it lists.
pub fn load_targets(dir: impl AsRef<Path>) -> Result<TargetSet> {
    let dir = dir.as_ref();
    let manifest_path = dir.join(MANIFEST);
    let manifest =
        fs::read_to_string(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
    let mut entries = Vec::new();
    for (lineno, line) in manifest.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let mut chars = line.chars();
        let (Some(ch), None) = (chars.next(), chars.next()) else {
            return Err(Error::Targets(format!(
                "{}:{}: expected a single character, got {line:?}",
                manifest_path.display(),
                lineno + 1
            )));
        };
        let path = dir.join(format!("{ch}.pgm"));
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let canvas = parse_pgm(&text).map_err(|message| Error::Bitmap {
            path: path.clone(),
            message,
        })?;
        entries.push((ch, canvas));
    }
    TargetSet::new(entries)
}

/// Parses a plain (`P2`) square PGM into a normalized canvas.
pub fn parse_pgm(text: &str) -> std::result::Result<Canvas, String> {
    let mut tokens = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or(""))
        .flat_map(str::split_whitespace);
    match tokens.next() {
        Some("P2") => {}
        Some(other) => return Err(format!("expected magic P2, found {other:?}")),
        None => return Err("empty file".into()),
    }
    let mut header = |name: &str| -> std::result::Result<usize, String> {
        let tok = tokens.next().ok_or_else(|| format!("missing {name}"))?;
        tok.parse()
            .map_err(|_| format!("invalid {name} {tok:?}"))
    };
    let width = header("width")?;
    let height = header("height")?;
    let maxval = header("maxval")?;
    if width != height {
        return Err(format!("bitmap must be square, got {width}x{height}"));
    }
    if width == 0 {
        return Err("bitmap has zero size".into());
    }
    if !(1..=65535).contains(&maxval) {
        return Err(format!("maxval {maxval} out of range"));
    }
    let mut pixels = Vec::with_capacity(width * height);
    for tok in tokens {
        let v: usize = tok
            .parse()
            .map_err(|_| format!("invalid sample {tok:?}"))?;
        if v > maxval {
            return Err(format!("sample {v} exceeds maxval {maxval}"));
        }
        pixels.push(v as f64 / maxval as f64);
    }
    if pixels.len() != width * height {
        return Err(format!(
            "expected {} samples, found {}",
            width * height,
            pixels.len()
        ));
    }
    Canvas::from_pixels(width, pixels).map_err(|e| e.to_string())
}

/// Encodes a canvas as plain PGM with maxval 255, one raster row per line.
pub fn encode_pgm(canvas: &Canvas) -> String {
    let n = canvas.size();
    let mut out = format!("P2\n{n} {n}\n255\n");
    for row in canvas.to_gray8().chunks(n) {
        let line: Vec<String> = row.iter().map(u8::to_string).collect();
        let _ = writeln!(out, "{}", line.join(" "));
    }
    out
}

type Stroke = &'static [(f64, f64)];

/// Skeleton polylines of a blocky sans capital in a 4 x 6 unit box.
fn letter_strokes(ch: char) -> Option<&'static [Stroke]> {
    const O: Stroke = &[
        (1.0, 0.0),
        (3.0, 0.0),
        (4.0, 1.0),
        (4.0, 5.0),
        (3.0, 6.0),
        (1.0, 6.0),
        (0.0, 5.0),
        (0.0, 1.0),
        (1.0, 0.0),
    ];
    const P_BOWL: Stroke = &[
        (0.0, 6.0),
        (0.0, 0.0),
        (3.0, 0.0),
        (4.0, 0.75),
        (4.0, 2.25),
        (3.0, 3.0),
        (0.0, 3.0),
    ];
    const C: Stroke = &[
        (4.0, 1.0),
        (3.0, 0.0),
        (1.0, 0.0),
        (0.0, 1.0),
        (0.0, 5.0),
        (1.0, 6.0),
        (3.0, 6.0),
        (4.0, 5.0),
    ];
    let strokes: &'static [Stroke] = match ch {
        'A' => &[&[(0.0, 6.0), (2.0, 0.0), (4.0, 6.0)], &[(0.67, 4.0), (3.33, 4.0)]],
        'B' => &[
            &[(0.0, 0.0), (0.0, 6.0)],
            &[(0.0, 0.0), (3.0, 0.0), (4.0, 0.75), (4.0, 2.25), (3.0, 3.0), (0.0, 3.0)],
            &[(3.0, 3.0), (4.0, 3.75), (4.0, 5.25), (3.0, 6.0), (0.0, 6.0)],
        ],
        'C' => &[C],
        'D' => &[&[
            (0.0, 0.0),
            (0.0, 6.0),
            (2.5, 6.0),
            (4.0, 4.5),
            (4.0, 1.5),
            (2.5, 0.0),
            (0.0, 0.0),
        ]],
        'E' => &[
            &[(4.0, 0.0), (0.0, 0.0), (0.0, 6.0), (4.0, 6.0)],
            &[(0.0, 3.0), (3.0, 3.0)],
        ],
        'F' => &[&[(4.0, 0.0), (0.0, 0.0), (0.0, 6.0)], &[(0.0, 3.0), (3.0, 3.0)]],
        'G' => &[&[
            (4.0, 1.0),
            (3.0, 0.0),
            (1.0, 0.0),
            (0.0, 1.0),
            (0.0, 5.0),
            (1.0, 6.0),
            (3.0, 6.0),
            (4.0, 5.0),
            (4.0, 3.5),
            (2.5, 3.5),
        ]],
        'H' => &[
            &[(0.0, 0.0), (0.0, 6.0)],
            &[(4.0, 0.0), (4.0, 6.0)],
            &[(0.0, 3.0), (4.0, 3.0)],
        ],
        'I' => &[
            &[(2.0, 0.0), (2.0, 6.0)],
            &[(1.0, 0.0), (3.0, 0.0)],
            &[(1.0, 6.0), (3.0, 6.0)],
        ],
        'J' => &[&[(4.0, 0.0), (4.0, 5.0), (3.0, 6.0), (1.0, 6.0), (0.0, 5.0)]],
        'K' => &[
            &[(0.0, 0.0), (0.0, 6.0)],
            &[(4.0, 0.0), (0.0, 3.5)],
            &[(1.2, 2.6), (4.0, 6.0)],
        ],
        'L' => &[&[(0.0, 0.0), (0.0, 6.0), (4.0, 6.0)]],
        'M' => &[&[(0.0, 6.0), (0.0, 0.0), (2.0, 3.5), (4.0, 0.0), (4.0, 6.0)]],
        'N' => &[&[(0.0, 6.0), (0.0, 0.0), (4.0, 6.0), (4.0, 0.0)]],
        'O' => &[O],
        'P' => &[P_BOWL],
        'Q' => &[O, &[(2.5, 4.5), (4.0, 6.0)]],
        'R' => &[P_BOWL, &[(2.0, 3.0), (4.0, 6.0)]],
        'S' => &[&[
            (4.0, 1.0),
            (3.0, 0.0),
            (1.0, 0.0),
            (0.0, 1.0),
            (0.0, 2.0),
            (1.0, 3.0),
            (3.0, 3.0),
            (4.0, 4.0),
            (4.0, 5.0),
            (3.0, 6.0),
            (1.0, 6.0),
            (0.0, 5.0),
        ]],
        'T' => &[&[(0.0, 0.0), (4.0, 0.0)], &[(2.0, 0.0), (2.0, 6.0)]],
        'U' => &[&[(0.0, 0.0), (0.0, 5.0), (1.0, 6.0), (3.0, 6.0), (4.0, 5.0), (4.0, 0.0)]],
        'V' => &[&[(0.0, 0.0), (2.0, 6.0), (4.0, 0.0)]],
        'W' => &[&[(0.0, 0.0), (1.0, 6.0), (2.0, 2.0), (3.0, 6.0), (4.0, 0.0)]],
        'X' => &[&[(0.0, 0.0), (4.0, 6.0)], &[(4.0, 0.0), (0.0, 6.0)]],
        'Y' => &[&[(0.0, 0.0), (2.0, 3.0), (4.0, 0.0)], &[(2.0, 3.0), (2.0, 6.0)]],
        'Z' => &[&[(0.0, 0.0), (4.0, 0.0), (0.0, 6.0), (4.0, 6.0)]],
        _ => return None,
    };
    Some(strokes)
}

pub const BUILTIN_CHARACTERS: &str = "ABCDEFGHIJKLMNOPQRSTUVWXYZ";

/// Renders one built-in capital onto a `size` x `size` canvas.
pub fn builtin_glyph(ch: char, size: usize) -> Option<Canvas> {
    let strokes = letter_strokes(ch)?;
    let n = size as f64;
    let unit = 0.12 * n;
    let (ox, oy) = ((n - 4.0 * unit) / 2.0, (n - 6.0 * unit) / 2.0);
    let radius = n / 12.8 / 2.0;
    let r2 = radius * radius;
    let mut canvas = Canvas::white(size);
    for stroke in strokes {
        for pair in stroke.windows(2) {
            let (ax, ay) = (ox + pair[0].0 * unit, oy + pair[0].1 * unit);
            let (bx, by) = (ox + pair[1].0 * unit, oy + pair[1].1 * unit);
            let (dx, dy) = (bx - ax, by - ay);
            let len2 = dx * dx + dy * dy;
            for y in 0..size {
                for x in 0..size {
                    let (px, py) = (x as f64 + 0.5, y as f64 + 0.5);
                    let t = (((px - ax) * dx + (py - ay) * dy) / len2).clamp(0.0, 1.0);
                    let (cx, cy) = (ax + t * dx - px, ay + t * dy - py);
                    if cx * cx + cy * cy <= r2 {
                        canvas.set(x, y, 0.0);
                    }
                }
            }
        }
    }
    Some(canvas)
}

/// The built-in 26-letter blocky reference alphabet.
pub fn builtin_alphabet(size: usize) -> TargetSet {
    TargetSet::new(
        BUILTIN_CHARACTERS
            .chars()
            .map(|c| (c, builtin_glyph(c, size).expect("builtin letter")))
            .collect(),
    )
    .expect("builtin alphabet is well formed")
}
