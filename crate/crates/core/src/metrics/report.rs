use std::fmt;

/// Scores for one evaluated image.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageScore {
    pub name: String,
    pub psnr: f64,
    pub ssim: f64,
}

/// Per-image and mean scores for one dataset / degradation pair.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub dataset: String,
    pub scale: u32,
    pub degradation: String,
    pub images: Vec<ImageScore>,
}

impl MetricReport {
    pub fn mean_psnr(&self) -> f64 {
        mean(self.images.iter().map(|s| s.psnr))
    }

    pub fn mean_ssim(&self) -> f64 {
        mean(self.images.iter().map(|s| s.ssim))
    }

    /// Tab-separated rows: a header, one row per image, then `mean`.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("dataset\tscale\tdegradation\timage\tpsnr\tssim\n");
        let rows = self
            .images
            .iter()
            .map(|s| (s.name.as_str(), s.psnr, s.ssim))
            .chain(std::iter::once(("mean", self.mean_psnr(), self.mean_ssim())));
        for (name, p, s) in rows {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{:.4}\t{:.6}\n",
                self.dataset, self.scale, self.degradation, name, p, s
            ));
        }
        out
    }
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        sum / n as f64
    }
}

impl fmt::Display for MetricReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} {} x{}", self.dataset, self.degradation, self.scale)?;
        let width = self.images.iter().map(|s| s.name.len()).max().unwrap_or(4).max(4);
        for s in &self.images {
            writeln!(f, "  {:<width$}  {:>8.4} dB  {:.4}", s.name, s.psnr, s.ssim)?;
        }
        write!(f, "  {:<width$}  {:>8.4} dB  {:.4}", "mean", self.mean_psnr(), self.mean_ssim())
    }
}
