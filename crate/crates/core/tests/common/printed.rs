//! Punnett tables and emission matrices as printed in the model
//! description, scaled by 4 so they are integers. Layout is
//! `[mother][father][child]`.

pub const AUTOSOMAL: [[[i64; 3]; 3]; 3] = [
    [[4, 0, 0], [2, 2, 0], [0, 4, 0]],
    [[2, 2, 0], [1, 2, 1], [0, 2, 2]],
    [[0, 4, 0], [0, 2, 2], [0, 0, 4]],
];

pub const X_FEMALE: [[[i64; 3]; 2]; 3] = [
    [[4, 0, 0], [0, 4, 0]],
    [[2, 2, 0], [0, 2, 2]],
    [[0, 4, 0], [0, 0, 4]],
];

/// The `(XaXa, XAY)` row reads `[0, 4]` here; a son always takes his
/// mother's X, so segregation gives `[4, 0]`.
pub const X_MALE: [[[i64; 2]; 2]; 3] = [
    [[4, 0], [0, 4]],
    [[2, 2], [2, 2]],
    [[0, 4], [0, 4]],
];

pub const X_UNKNOWN: [[[i64; 5]; 2]; 3] = [
    [[2, 0, 0, 2, 0], [0, 2, 0, 0, 2]],
    [[1, 1, 0, 1, 1], [0, 1, 1, 1, 1]],
    [[0, 2, 0, 0, 2], [0, 0, 2, 0, 2]],
];

pub const AD_EMISSION: [[i64; 2]; 3] = [[0, 1], [0, 1], [1, 0]];
pub const AR_EMISSION: [[i64; 2]; 3] = [[0, 1], [1, 0], [1, 0]];
pub const XL_FEMALE_EMISSION: [[i64; 2]; 3] = [[0, 1], [1, 0], [1, 0]];
pub const XL_MALE_EMISSION: [[i64; 2]; 2] = [[0, 1], [1, 0]];
pub const XL_UNKNOWN_EMISSION: [[i64; 2]; 5] = [[0, 1], [1, 0], [1, 0], [0, 1], [1, 0]];
