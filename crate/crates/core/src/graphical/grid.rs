/// Occupancy on integer times `t0..=t1` for sites `x0..x1`, with row prefix sums for
/// O(1) window counts.
#[derive(Debug, Clone)]
pub struct SpaceTimeGrid {
    x0: i64,
    x1: i64,
    t0: i64,
    t1: i64,
    cells: Vec<u8>,
    prefix: Vec<u32>,
}

impl SpaceTimeGrid {
    /// `rows[i]` holds sites `x0..x1` at time `t0 + i`.
    pub fn from_rows(x0: i64, x1: i64, t0: i64, rows: Vec<Vec<u8>>) -> Self {
        let width = (x1 - x0) as usize;
        let t1 = t0 + rows.len() as i64 - 1;
        let mut cells = Vec::with_capacity(width * rows.len());
        let mut prefix = Vec::with_capacity((width + 1) * rows.len());
        for row in &rows {
            assert_eq!(row.len(), width, "grid row has the wrong width");
            cells.extend_from_slice(row);
            let mut acc = 0u32;
            prefix.push(0);
            for &v in row {
                acc += v as u32;
                prefix.push(acc);
            }
        }
        Self { x0, x1, t0, t1, cells, prefix }
    }

    pub fn x_range(&self) -> (i64, i64) {
        (self.x0, self.x1)
    }

    pub fn t_range(&self) -> (i64, i64) {
        (self.t0, self.t1)
    }

    pub fn covers(&self, x0: i64, x1: i64, t0: i64, t1: i64) -> bool {
        x0 >= self.x0 && x1 <= self.x1 && t0 >= self.t0 && t1 <= self.t1
    }

    fn width(&self) -> usize {
        (self.x1 - self.x0) as usize
    }

    pub fn get(&self, x: i64, t: i64) -> Option<u8> {
        if x < self.x0 || x >= self.x1 || t < self.t0 || t > self.t1 {
            return None;
        }
        Some(self.cells[(t - self.t0) as usize * self.width() + (x - self.x0) as usize])
    }

    pub fn row(&self, t: i64) -> Option<&[u8]> {
        if t < self.t0 || t > self.t1 {
            return None;
        }
        let w = self.width();
        let i = (t - self.t0) as usize * w;
        Some(&self.cells[i..i + w])
    }

    /// Particles in `[x, x+w)` at time `t`.
    pub fn window_count(&self, x: i64, w: i64, t: i64) -> Option<u32> {
        if w < 0 || x < self.x0 || x + w > self.x1 || t < self.t0 || t > self.t1 {
            return None;
        }
        let base = (t - self.t0) as usize * (self.width() + 1);
        let a = (x - self.x0) as usize;
        Some(self.prefix[base + a + w as usize] - self.prefix[base + a])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_and_lookup() {
        let g = SpaceTimeGrid::from_rows(-2, 2, 5, vec![vec![1, 0, 1, 1], vec![0, 0, 0, 1]]);
        assert_eq!(g.t_range(), (5, 6));
        assert_eq!(g.get(-2, 5), Some(1));
        assert_eq!(g.get(1, 6), Some(1));
        assert_eq!(g.get(2, 6), None);
        assert_eq!(g.window_count(-2, 4, 5), Some(3));
        assert_eq!(g.window_count(-1, 2, 5), Some(1));
        assert_eq!(g.window_count(0, 3, 5), None);
        assert_eq!(g.window_count(-2, 0, 6), Some(0));
        assert!(g.covers(-2, 2, 5, 6) && !g.covers(-3, 2, 5, 6));
    }
}
