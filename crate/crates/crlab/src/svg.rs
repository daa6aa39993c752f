use crlab_core::surface_mesh::SurfaceMesh;

fn color(t: f64) -> String {
    // blue -> white -> red
    let t = t.clamp(0.0, 1.0);
    let (r, g, b) = if t < 0.5 {
        let s = t / 0.5;
        (40.0 + 215.0 * s, 70.0 + 185.0 * s, 200.0 + 55.0 * s)
    } else {
        let s = (t - 0.5) / 0.5;
        (255.0, 255.0 - 185.0 * s, 255.0 - 215.0 * s)
    };
    format!("rgb({},{},{})", r as u8, g as u8, b as u8)
}

/// Vertex colour map of a per-quotient-vertex field over the fundamental domain.
pub fn field_svg(mesh: &SurfaceMesh, values: &[f64], title: &str) -> String {
    let size = 520.0;
    let half = size / 2.0;
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    let mut s = format!("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{size}\" height=\"{}\" viewBox=\"0 0 {size} {}\">\n", size + 30.0, size + 30.0);
    s.push_str(&format!("<circle cx=\"{half}\" cy=\"{half}\" r=\"{}\" fill=\"none\" stroke=\"#999\"/>\n", half - 10.0));
    for tri in &mesh.triangles {
        let v: f64 = tri.iter().map(|&k| values[mesh.dof(k)]).sum::<f64>() / 3.0;
        let pts: Vec<String> = tri
            .iter()
            .map(|&k| {
                let z = mesh.vertices[k];
                format!("{:.2},{:.2}", half + (half - 10.0) * z.re, half - (half - 10.0) * z.im)
            })
            .collect();
        s.push_str(&format!("<polygon points=\"{}\" fill=\"{}\" stroke=\"none\"/>\n", pts.join(" "), color((v - lo) / span)));
    }
    s.push_str(&format!("<text x=\"10\" y=\"{}\" font-family=\"sans-serif\" font-size=\"13\">{title}  min {lo:.6} max {hi:.6}</text>\n", size + 20.0));
    s.push_str("</svg>\n");
    s
}
