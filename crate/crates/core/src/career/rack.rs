use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::physics::{Table, Vec2};

/// Number of event balls in one rack: 1 milestone + 3 random + 3 skill.
pub const RACK_SLOTS: usize = 7;

pub(crate) fn round_rng(seed: u64, round_index: u32, stream: u64) -> ChaCha8Rng {
    let mixed = seed
        ^ u64::from(round_index).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ stream.wrapping_mul(0xD1B5_4A32_D192_ED03);
    ChaCha8Rng::seed_from_u64(mixed)
}

/// Deterministic rack for `(seed, round_index)`.
///
/// Slot 0 is the milestone on the foot spot. Slots 1..7 form two rows behind
/// it (2 then 4 balls) spaced 3.5 radii apart, each jittered by at most half
/// a ball radius. The returned permutation assigns the six non-milestone
/// events (randoms then skills, in bundle order) to slots 1..7.
pub fn rack_layout(table: &Table, seed: u64, round_index: u32) -> ([Vec2; RACK_SLOTS], [usize; 6]) {
    let mut rng = round_rng(seed, round_index, 1);
    let r = table.ball_radius;
    let spacing = 3.5 * r;
    let row_gap = spacing * 3f64.sqrt() / 2.0;
    let foot = table.foot_spot();

    let mut slots = [foot; RACK_SLOTS];
    let offsets = [
        (1.0, -0.5),
        (1.0, 0.5),
        (2.0, -1.5),
        (2.0, -0.5),
        (2.0, 0.5),
        (2.0, 1.5),
    ];
    for (slot, (row, lane)) in slots.iter_mut().skip(1).zip(offsets) {
        let angle: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let radius: f64 = rng.random_range(0.0..=r / 2.0);
        *slot = Vec2::new(
            foot.x + row * row_gap + radius * angle.cos(),
            foot.y + lane * spacing + radius * angle.sin(),
        );
    }

    let mut order = [0usize, 1, 2, 3, 4, 5];
    for i in (1..order.len()).rev() {
        let j = rng.random_range(0..=i);
        order.swap(i, j);
    }
    (slots, order)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_is_deterministic_and_separated() {
        let t = Table::default();
        let a = rack_layout(&t, 7, 1);
        assert_eq!(a, rack_layout(&t, 7, 1));
        assert_ne!(a.0, rack_layout(&t, 7, 2).0);
        for seed in 0..200 {
            let (slots, order) = rack_layout(&t, seed, 3);
            let mut sorted = order;
            sorted.sort_unstable();
            assert_eq!(sorted, [0, 1, 2, 3, 4, 5]);
            for (i, p) in slots.iter().enumerate() {
                assert!(t.contains_ball_center(*p));
                assert!(t.pocket_at(*p).is_none());
                for q in &slots[i + 1..] {
                    assert!(p.distance(*q) >= 2.0 * t.ball_radius, "overlap seed {seed}");
                }
            }
            assert_eq!(slots[0], t.foot_spot());
        }
    }
}
