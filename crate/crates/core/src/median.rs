//! 3x3 median filter applied to every pixel (comparison baseline).

use crate::image::GrayImage;

pub fn median_filter(img: &GrayImage) -> GrayImage {
    let mut out = img.clone();
    for i in 0..img.height() {
        for j in 0..img.width() {
            let mut window = [0u8; 9];
            let mut k = 0;
            for di in -1..=1 {
                for dj in -1..=1 {
                    window[k] = img.get_reflect(i as isize + di, j as isize + dj);
                    k += 1;
                }
            }
            window.sort_unstable();
            out.set(i, j, window[4]);
        }
    }
    out
}
