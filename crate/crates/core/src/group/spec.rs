use serde::{Deserialize, Serialize};

/// Base families with a confluent, length-reducing normal form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaseFamily {
    /// Free group of the given rank (at least 2).
    FreeGroup { rank: usize },
    /// Free product of finite cyclic groups `Z/n_1 * ... * Z/n_m`.
    FreeProduct { orders: Vec<u32> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    FreeGroup {
        rank: usize,
    },
    FreeProduct {
        orders: Vec<u32>,
    },
    /// `base x K` with `K` given by its multiplication table; index 0 must be the identity.
    DirectWithFinite {
        base: BaseFamily,
        table: Vec<Vec<usize>>,
    },
}

/// User-facing description of a group and of the generating set used for the word metric.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupSpec {
    pub family: Family,
    /// Symmetric generating set, one symbol per element (e.g. `"a^-1"` or `"(b,1)"`).
    pub generators: Vec<String>,
    /// Optional names for the base factors; defaults to `a`, `b`, `c`, ...
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub names: Option<Vec<String>>,
}

impl GroupSpec {
    /// Free group of rank `k` with its standard generators.
    pub fn free_group(rank: usize) -> Self {
        let names = default_names(rank);
        let generators = names
            .iter()
            .flat_map(|n| [n.clone(), format!("{n}^-1")])
            .collect();
        GroupSpec {
            family: Family::FreeGroup { rank },
            generators,
            names: None,
        }
    }

    /// Free product of cyclic groups with the standard symmetric generators.
    pub fn free_product(orders: &[u32]) -> Self {
        let names = default_names(orders.len());
        let mut generators = Vec::new();
        for (n, &order) in names.iter().zip(orders) {
            generators.push(n.clone());
            if order > 2 {
                generators.push(format!("{n}^-1"));
            }
        }
        GroupSpec {
            family: Family::FreeProduct {
                orders: orders.to_vec(),
            },
            generators,
            names: None,
        }
    }

    /// `F_2 x Z/2` with the generating set `{(e,1), (a^±1,1), (b^±1,1)}`.
    pub fn free_times_z2() -> Self {
        GroupSpec {
            family: Family::DirectWithFinite {
                base: BaseFamily::FreeGroup { rank: 2 },
                table: vec![vec![0, 1], vec![1, 0]],
            },
            generators: ["(e,1)", "(a,1)", "(a^-1,1)", "(b,1)", "(b^-1,1)"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
            names: None,
        }
    }

    /// `F_2 x Z/2` with the product generating set `{(a^±1,0), (b^±1,0), (e,1)}`.
    ///
    /// With this metric the Busemann boundary is `∂F_2 x Z/2`, the second
    /// coordinate being that of the points converging to it.
    pub fn free_times_z2_standard() -> Self {
        let mut spec = Self::free_times_z2();
        spec.generators = ["(a,0)", "(a^-1,0)", "(b,0)", "(b^-1,0)", "(e,1)"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        spec
    }
}

pub(crate) fn default_names(n: usize) -> Vec<String> {
    // `e` is reserved for the identity.
    ('a'..='z')
        .filter(|&c| c != 'e')
        .map(|c| c.to_string())
        .chain((25..).map(|i| format!("x{i}")))
        .take(n)
        .collect()
}
