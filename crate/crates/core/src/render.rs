//! Plain-text scheme diagrams: modes as rows, elements as columns, light
//! travelling left to right.

use std::fmt::Write;

use crate::element::OpticalElement;
use crate::scheme::Scheme;

const CELL: usize = 5;

/// Renders `scheme` as one row per mode followed by an element legend.
///
/// Each row starts with the mode index, its role (`s` signal, `a` ancilla) and
/// the injected photon count for ancillas. Ancilla rows end with the photon
/// count the herald expects. Beam splitters show as `o` on both modes joined
/// by `|`; phase shifters as `P`.
pub fn render(scheme: &Scheme) -> String {
    let n = scheme.modes;
    let cols = scheme.elements.len();
    let mut grid = vec![vec!['-'; cols * CELL + 2]; n];
    for (k, element) in scheme.elements.iter().enumerate() {
        let x = k * CELL + CELL / 2 + 2;
        match *element {
            OpticalElement::PhaseShifter { mode, .. } => grid[mode][x] = 'P',
            OpticalElement::BeamSplitter { a, b, .. } => {
                let (lo, hi) = (a.min(b), a.max(b));
                for row in grid.iter_mut().take(hi).skip(lo + 1) {
                    row[x] = '|';
                }
                grid[a][x] = 'o';
                grid[b][x] = 'o';
            }
        }
    }

    let width = n.saturating_sub(1).to_string().len();
    let mut out = String::new();
    let pad = width + 7;
    let mut header = " ".repeat(pad + 2);
    for k in 0..cols {
        let label = (k + 1).to_string();
        let x = k * CELL + CELL / 2 + 2;
        while header.len() < pad + x {
            header.push(' ');
        }
        header.push_str(&label);
    }
    if cols > 0 {
        let _ = writeln!(out, "{}", header.trim_end());
    }
    for (mode, row) in grid.iter().enumerate() {
        let wire: String = row.iter().collect();
        let (role, input, output) = match scheme.ancilla_modes.iter().position(|&m| m == mode) {
            Some(i) => (
                "a",
                scheme.ancilla_input[i].to_string(),
                format!(" {}", scheme.herald_pattern[i]),
            ),
            None if scheme.signal_modes.contains(&mode) => ("s", " ".to_string(), String::new()),
            None => ("-", "0".to_string(), String::new()),
        };
        let _ = writeln!(out, "{mode:>width$} {role} {input} >{wire}>{output}");
    }
    if !scheme.elements.is_empty() {
        out.push('\n');
        for (k, element) in scheme.elements.iter().enumerate() {
            let _ = writeln!(out, "{:>3}  {element}", k + 1);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scheme::builtin;

    #[test]
    fn nsx_diagram() {
        let text = render(&builtin("NSx").unwrap());
        let rows: Vec<&str> = text.lines().skip(1).take(3).collect();
        assert!(rows[0].starts_with("0 s"));
        assert!(
            rows[1].starts_with("1 a 1") && rows[1].ends_with("> 1"),
            "{text}"
        );
        assert!(
            rows[2].starts_with("2 a 0") && rows[2].ends_with("> 0"),
            "{text}"
        );
        assert_eq!(text.lines().filter(|l| l.contains(" >")).count(), 3);
        assert!(text.contains("PS[0](φ=180°)"));
    }

    #[test]
    fn beam_splitter_spans_rows() {
        let text = render(&builtin("CZ_1_9").unwrap());
        let rows: Vec<&str> = text.lines().skip(1).take(6).collect();
        // the BS on modes 0 and 4 crosses rows 1 to 3
        let x = rows[0].find('o').unwrap();
        for r in &rows[1..4] {
            assert_eq!(r.as_bytes()[x], b'|', "{text}");
        }
        assert_eq!(rows[4].as_bytes()[x], b'o');
    }
}
