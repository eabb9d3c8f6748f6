//! Sample an Ornstein-Uhlenbeck site-energy path and check its stationary
//! variance and correlation time.

use enaqt::noise::{ou_init, ou_step, NoiseConfig};
use enaqt::quantum::RandomStream;

pub fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (variance, lambda, dt) = (0.49, 2.0, 0.01);
    let config = NoiseConfig::ornstein_uhlenbeck(vec![variance], lambda)?;
    let mut rng = RandomStream::new(5, &[]);

    let mut x = ou_init(&config, &mut rng);
    let path: Vec<f64> = (0..500_000)
        .map(|_| {
            x = ou_step(&x, &config, dt, &mut rng).expect("OU noise");
            x[0]
        })
        .collect();

    let mean = path.iter().sum::<f64>() / path.len() as f64;
    let var = path.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / path.len() as f64;
    println!("variance {var:.4} (expected {variance})");

    for lag_time in [0.25, 0.5, 1.0] {
        let lag = (lag_time / dt) as usize;
        let cov = path.windows(lag + 1).map(|w| (w[0] - mean) * (w[lag] - mean)).sum::<f64>()
            / (path.len() - lag) as f64;
        println!(
            "correlation at {lag_time}: {:.4} (expected {:.4})",
            cov / var,
            (-lambda * lag_time).exp()
        );
    }
    Ok(())
}
