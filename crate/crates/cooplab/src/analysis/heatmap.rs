//! SVG heatmap of a cooperation matrix.
//!
//! Tiles run T left-to-right and S bottom-to-top. Values map linearly onto
//! a purple-to-yellow gradient, 0 to 1. Cells of the original experimental
//! window can be outlined; each such tile carries `class="orig"` so they
//! are countable in the output.

use crate::analysis::Region;
use crate::matrix::CooperationMatrix;

/// Gradient endpoint for value 0.
pub const COLOR_LOW: (u8, u8, u8) = (68, 1, 84);
/// Gradient endpoint for value 1.
pub const COLOR_HIGH: (u8, u8, u8) = (253, 231, 37);

#[derive(Clone, Copy, Debug)]
pub struct HeatmapStyle {
    /// Edge length of one tile in pixels.
    pub cell_px: u32,
    /// Outline the cells of the original experimental window.
    pub outline_original: bool,
}

impl Default for HeatmapStyle {
    fn default() -> Self {
        HeatmapStyle {
            cell_px: 24,
            outline_original: false,
        }
    }
}

/// Linear interpolation between the two gradient endpoints.
pub fn color_for(value: f64) -> String {
    let v = value.clamp(0.0, 1.0);
    let channel = |lo: u8, hi: u8| (f64::from(lo) + (f64::from(hi) - f64::from(lo)) * v).round() as u8;
    format!(
        "#{:02x}{:02x}{:02x}",
        channel(COLOR_LOW.0, COLOR_HIGH.0),
        channel(COLOR_LOW.1, COLOR_HIGH.1),
        channel(COLOR_LOW.2, COLOR_HIGH.2),
    )
}

/// Renders the matrix as a standalone SVG document.
pub fn render_heatmap(m: &CooperationMatrix, style: &HeatmapStyle) -> String {
    let grid = m.grid();
    let cell = style.cell_px;
    let margin_left = 40u32;
    let margin_bottom = 36u32;
    let margin_top = 10u32;
    let margin_right = 10u32;
    let plot_w = grid.n_t() as u32 * cell;
    let plot_h = grid.n_s() as u32 * cell;
    let width = margin_left + plot_w + margin_right;
    let height = margin_top + plot_h + margin_bottom;

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" viewBox=\"0 0 {width} {height}\">\n"
    ));
    svg.push_str(&format!(
        "  <rect x=\"0\" y=\"0\" width=\"{width}\" height=\"{height}\" fill=\"white\"/>\n"
    ));

    // tiles: t indexes columns, s rows with s_max at the top
    for (s, t, v) in m.iter() {
        let col = ((t - grid.t_min) / grid.step) as u32;
        let row = ((grid.s_max - s) / grid.step) as u32;
        let x = margin_left + col * cell;
        let y = margin_top + row * cell;
        let fill = color_for(v);
        if style.outline_original && Region::Original.contains(s, t) {
            svg.push_str(&format!(
                "  <rect class=\"orig\" x=\"{x}\" y=\"{y}\" width=\"{cell}\" height=\"{cell}\" fill=\"{fill}\" stroke=\"black\" stroke-width=\"1.5\"/>\n"
            ));
        } else {
            svg.push_str(&format!(
                "  <rect x=\"{x}\" y=\"{y}\" width=\"{cell}\" height=\"{cell}\" fill=\"{fill}\"/>\n"
            ));
        }
    }

    // axis tick labels at the extremes
    let font = "font-family=\"sans-serif\" font-size=\"11\"";
    svg.push_str(&format!(
        "  <text x=\"{x}\" y=\"{y}\" {font} text-anchor=\"middle\">{v}</text>\n",
        x = margin_left + cell / 2,
        y = margin_top + plot_h + 14,
        v = grid.t_min,
    ));
    svg.push_str(&format!(
        "  <text x=\"{x}\" y=\"{y}\" {font} text-anchor=\"middle\">{v}</text>\n",
        x = margin_left + plot_w - cell / 2,
        y = margin_top + plot_h + 14,
        v = grid.t_max,
    ));
    svg.push_str(&format!(
        "  <text x=\"{x}\" y=\"{y}\" {font} text-anchor=\"end\">{v}</text>\n",
        x = margin_left - 6,
        y = margin_top + plot_h - cell / 2 + 4,
        v = grid.s_min,
    ));
    svg.push_str(&format!(
        "  <text x=\"{x}\" y=\"{y}\" {font} text-anchor=\"end\">{v}</text>\n",
        x = margin_left - 6,
        y = margin_top + cell / 2 + 4,
        v = grid.s_max,
    ));

    // axis names: T horizontal, S vertical
    svg.push_str(&format!(
        "  <text x=\"{x}\" y=\"{y}\" {font} text-anchor=\"middle\">T</text>\n",
        x = margin_left + plot_w / 2,
        y = margin_top + plot_h + 30,
    ));
    svg.push_str(&format!(
        "  <text x=\"12\" y=\"{y}\" {font} text-anchor=\"middle\">S</text>\n",
        y = margin_top + plot_h / 2,
    ));
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::GridSpec;

    #[test]
    fn color_endpoints() {
        assert_eq!(color_for(0.0), "#440154");
        assert_eq!(color_for(1.0), "#fde725");
    }

    #[test]
    fn all_zero_matrix_renders_minimum_color_tiles() {
        let m = CooperationMatrix::from_fn(GridSpec::new(0, 2, 0, 2), |_, _| 0.0);
        let svg = render_heatmap(&m, &HeatmapStyle::default());
        assert_eq!(svg.matches("fill=\"#440154\"").count(), 9);
        assert!(svg.contains(">T<") && svg.contains(">S<"));
    }

    #[test]
    fn single_cell_maximum() {
        let m = CooperationMatrix::from_fn(GridSpec::new(1, 1, 1, 1), |_, _| 1.0);
        let svg = render_heatmap(&m, &HeatmapStyle::default());
        assert_eq!(svg.matches("fill=\"#fde725\"").count(), 1);
    }

    #[test]
    fn original_region_outline_covers_121_cells() {
        let m = CooperationMatrix::from_fn(GridSpec::extended(), |_, _| 0.5);
        let style = HeatmapStyle {
            outline_original: true,
            ..HeatmapStyle::default()
        };
        let svg = render_heatmap(&m, &style);
        assert_eq!(svg.matches("class=\"orig\"").count(), 121);
        let plain = render_heatmap(&m, &HeatmapStyle::default());
        assert_eq!(plain.matches("class=\"orig\"").count(), 0);
    }

    #[test]
    fn s_axis_points_up() {
        // with two rows, the higher S must sit at the smaller y
        let m = CooperationMatrix::from_cells(GridSpec::new(0, 1, 0, 0), vec![0.0, 1.0]).unwrap();
        let svg = render_heatmap(&m, &HeatmapStyle::default());
        let y_of = |color: &str| -> u32 {
            let tile = svg
                .lines()
                .find(|l| l.contains(color))
                .expect("tile present");
            tile.split("y=\"")
                .nth(1)
                .and_then(|rest| rest.split('"').next())
                .and_then(|v| v.parse().ok())
                .expect("y attribute")
        };
        assert!(y_of("#fde725") < y_of("#440154"));
    }
}
