use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::IndexedRandom;

use super::IncidentRecord;
use crate::rng::seeded;

/// (hazard-category, hazard, cue words, relative frequency)
const HAZARDS: &[(&str, &str, &[&str], f64)] = &[
    ("biological", "listeria monocytogenes", &["listeria", "bacteria", "monocytogenes"], 30.0),
    ("biological", "salmonella", &["salmonella", "bacteria", "poisoning"], 25.0),
    ("allergens", "milk and products thereof", &["milk", "undeclared", "dairy"], 20.0),
    ("allergens", "peanuts and products thereof", &["peanut", "undeclared", "nuts"], 8.0),
    ("foreign bodies", "glass fragments", &["glass", "fragments", "particles"], 6.0),
    ("foreign bodies", "plastic fragments", &["plastic", "pieces", "fragments"], 3.0),
    ("chemical", "pesticide residues", &["pesticide", "residues", "chemical"], 2.0),
    ("fraud", "unauthorised substance", &["unauthorised", "substance", "fraud"], 1.0),
];

/// (product-category, product, cue words, relative frequency)
const PRODUCTS: &[(&str, &str, &[&str], f64)] = &[
    ("meat, egg and dairy products", "cheese", &["cheese", "soft", "brie"], 25.0),
    ("meat, egg and dairy products", "ham", &["ham", "sliced", "pork"], 15.0),
    ("cereals and bakery products", "bread", &["bread", "loaf", "bakery"], 20.0),
    ("cereals and bakery products", "cookies", &["cookies", "biscuits", "chocolate"], 10.0),
    ("alcoholic beverages", "beer", &["beer", "bottles", "brewery"], 6.0),
    ("fruits and vegetables", "spinach", &["spinach", "leaves", "salad"], 4.0),
    ("nuts, nut products and seeds", "almonds", &["almonds", "roasted", "snack"], 2.0),
];

const FILLER: &[&str] = &[
    "recall", "company", "announced", "consumers", "product", "batch", "sold", "stores", "return",
    "refund", "possible", "health", "risk", "lot", "date", "best", "before", "notice", "agency",
];

/// Flat synonym database covering the toy vocabulary.
pub const TOY_SYNONYMS: &str = "recall\twithdrawal,callback\n\
company\tfirm,business\n\
announced\tdeclared,stated\n\
consumers\tcustomers,buyers\n\
possible\tpotential,likely\n\
risk\thazard,danger\n\
sold\tmarketed,retailed\n\
stores\tshops,outlets\n\
undeclared\tunlisted\n\
fragments\tshards,pieces\n\
bacteria\tgerms,microbes\n\
soft\ttender\n\
roasted\ttoasted\n";

/// Seeded synthetic recall announcements with a long-tailed label
/// distribution and class-specific cue words. Ids are `toy-<i>` from `first_id`.
pub fn toy_corpus(n: usize, first_id: usize, seed: u64) -> Vec<IncidentRecord> {
    let mut rng = seeded(seed);
    let hz = WeightedIndex::new(HAZARDS.iter().map(|h| h.3)).expect("positive weights");
    let pr = WeightedIndex::new(PRODUCTS.iter().map(|p| p.3)).expect("positive weights");
    (0..n)
        .map(|i| {
            let (hc, hazard, hcues, _) = HAZARDS[hz.sample(&mut rng)];
            let (pc, product, pcues, _) = PRODUCTS[pr.sample(&mut rng)];
            let mut words = |cues: &[&'static str], k: usize| -> Vec<&'static str> {
                (0..k)
                    .map(|j| {
                        if j % 2 == 0 {
                            *cues.choose(&mut rng).expect("cues")
                        } else {
                            *FILLER.choose(&mut rng).expect("filler")
                        }
                    })
                    .collect()
            };
            let title = format!("{} {}", words(pcues, 3).join(" "), words(hcues, 3).join(" "));
            let mut text = words(FILLER, 2);
            text.extend(words(hcues, 6));
            text.extend(words(pcues, 6));
            IncidentRecord {
                id: format!("toy-{}", first_id + i),
                title,
                text: text.join(" "),
                hazard_category: hc.to_string(),
                product_category: pc.to_string(),
                hazard: hazard.to_string(),
                product: product.to_string(),
                is_synthetic: false,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::augment::SynonymDb;
    use crate::corpus::{compute_label_space, Category};

    #[test]
    fn deterministic_and_long_tailed() {
        let a = toy_corpus(400, 0, 1);
        assert_eq!(a, toy_corpus(400, 0, 1));
        assert_eq!(a[7].id, "toy-7");
        let space = compute_label_space(&a, Category::Hazard);
        let max = space.counts.values().max().unwrap();
        let min = space.counts.values().min().unwrap();
        assert!(max > &(5 * min));
        assert!(SynonymDb::from_flat(TOY_SYNONYMS.as_bytes()).unwrap().len() > 10);
    }
}
