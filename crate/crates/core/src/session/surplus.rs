use crate::lob::Price;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Equilibrium {
    /// Maximum total surplus any allocation of these limits can realise.
    pub surplus: i64,
    /// Number of intramarginal pairs.
    pub quantity: usize,
    /// Competitive equilibrium price interval, when any pair trades.
    pub price_range: Option<(Price, Price)>,
}

/// Sorts buyer limits descending and seller limits ascending and pairs them
/// while the buyer's limit is at least the seller's.
pub fn equilibrium_surplus(buyer_limits: &[Price], seller_limits: &[Price]) -> Equilibrium {
    let mut b: Vec<i64> = buyer_limits.iter().map(|p| p.0).collect();
    let mut s: Vec<i64> = seller_limits.iter().map(|p| p.0).collect();
    b.sort_unstable_by(|x, y| y.cmp(x));
    s.sort_unstable();
    let q = b.iter().zip(&s).take_while(|(bb, ss)| bb >= ss).count();
    let surplus = b[..q].iter().zip(&s[..q]).map(|(bb, ss)| bb - ss).sum();
    let price_range = (q > 0).then(|| {
        let mut lo = s[q - 1];
        let mut hi = b[q - 1];
        // the first extramarginal trader on each side tightens the interval
        if let Some(&next_b) = b.get(q) {
            lo = lo.max(next_b);
        }
        if let Some(&next_s) = s.get(q) {
            hi = hi.min(next_s);
        }
        (Price(lo), Price(hi))
    });
    Equilibrium { surplus, quantity: q, price_range }
}
