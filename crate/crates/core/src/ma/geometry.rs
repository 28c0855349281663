//! Convex polygon clipping with edge labels.

/// A convex polygon whose edge `i` runs from `verts[i]` to `verts[i + 1]`
/// and carries `labels[i]`.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledPolygon<L: Copy> {
    pub verts: Vec<[f64; 2]>,
    pub labels: Vec<L>,
}

impl<L: Copy> LabeledPolygon<L> {
    pub fn rectangle(lo: [f64; 2], hi: [f64; 2], label: L) -> Self {
        LabeledPolygon {
            verts: vec![lo, [hi[0], lo[1]], hi, [lo[0], hi[1]]],
            labels: vec![label; 4],
        }
    }

    pub fn is_empty(&self) -> bool {
        self.verts.len() < 3
    }

    /// Intersects with `{s : <a, s> <= b}`; edges on the cutting line get
    /// `label`. Returns `false` when the half-plane does not cut.
    pub fn clip(&mut self, a: [f64; 2], b: f64, label: L, tol: f64) -> bool {
        let d: Vec<f64> = self
            .verts
            .iter()
            .map(|v| a[0] * v[0] + a[1] * v[1] - b)
            .collect();
        if d.iter().all(|&x| x <= tol) {
            return false;
        }
        let k = self.verts.len();
        let mut verts = Vec::with_capacity(k + 1);
        let mut labels = Vec::with_capacity(k + 1);
        for i in 0..k {
            let j = (i + 1) % k;
            let inside_i = d[i] <= tol;
            let inside_j = d[j] <= tol;
            if inside_i {
                verts.push(self.verts[i]);
                labels.push(self.labels[i]);
            }
            if inside_i != inside_j {
                let t = d[i] / (d[i] - d[j]);
                let t = t.clamp(0.0, 1.0);
                let p = [
                    self.verts[i][0] + t * (self.verts[j][0] - self.verts[i][0]),
                    self.verts[i][1] + t * (self.verts[j][1] - self.verts[i][1]),
                ];
                if inside_i {
                    // a cut through v_i itself relabels the edge leaving v_i
                    if verts.last() == Some(&p) {
                        *labels.last_mut().unwrap() = label;
                    } else {
                        verts.push(p);
                        labels.push(label);
                    }
                } else if p != self.verts[j] {
                    verts.push(p);
                    labels.push(self.labels[i]);
                }
            }
        }
        self.verts = verts;
        self.labels = labels;
        true
    }

    pub fn area(&self) -> f64 {
        let k = self.verts.len();
        let mut a = 0.0;
        for i in 0..k {
            let p = self.verts[i];
            let q = self.verts[(i + 1) % k];
            a += p[0] * q[1] - p[1] * q[0];
        }
        0.5 * a
    }

    pub fn centroid(&self) -> [f64; 2] {
        let k = self.verts.len();
        let o = self.verts[0];
        let mut acc = [0.0; 2];
        let mut total = 0.0;
        for i in 1..k.saturating_sub(1) {
            let p = self.verts[i];
            let q = self.verts[i + 1];
            let w = 0.5 * ((p[0] - o[0]) * (q[1] - o[1]) - (p[1] - o[1]) * (q[0] - o[0]));
            total += w;
            for c in 0..2 {
                acc[c] += w * (o[c] + p[c] + q[c]) / 3.0;
            }
        }
        [acc[0] / total, acc[1] / total]
    }
}
