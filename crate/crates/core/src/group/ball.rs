use std::collections::VecDeque;

use rustc_hash::FxHashMap;

use super::{Element, Group};
use crate::error::{Error, Result};

/// All elements at word distance at most `radius` from the identity, in BFS order.
///
/// Ids are dense and sorted by distance, then by normal form, so the layout is
/// reproducible. `neighbor(i, s)` is `x_i * s_s` when that element is inside the ball.
#[derive(Clone, Debug)]
pub struct Ball {
    radius: usize,
    elements: Vec<Element>,
    index: FxHashMap<Element, u32>,
    /// `sphere_start[r]` is the first id at distance `r`; has `radius + 2` entries.
    sphere_start: Vec<usize>,
    adjacency: Vec<Vec<Option<u32>>>,
}

impl Ball {
    pub fn new(group: &Group, radius: usize) -> Ball {
        let gens = group.generators();
        let spheres = Ball::spheres(group, radius);
        let mut sphere_start = Vec::with_capacity(radius + 2);
        let mut elements = Vec::with_capacity(spheres.iter().map(Vec::len).sum());
        for sphere in spheres {
            sphere_start.push(elements.len());
            elements.extend(sphere);
        }
        sphere_start.push(elements.len());
        let index: FxHashMap<Element, u32> = elements
            .iter()
            .enumerate()
            .map(|(i, x)| (x.clone(), i as u32))
            .collect();
        let adjacency = elements
            .iter()
            .map(|x| {
                gens.iter()
                    .map(|s| index.get(&group.mul(x, s)).copied())
                    .collect()
            })
            .collect();
        Ball {
            radius,
            elements,
            index,
            sphere_start,
            adjacency,
        }
    }

    /// The spheres of radius `0..=radius`, each sorted by normal form, without building adjacency.
    pub fn spheres(group: &Group, radius: usize) -> Vec<Vec<Element>> {
        let gens = group.generators();
        let mut spheres: Vec<Vec<Element>> = vec![vec![Element::identity()]];
        let mut seen: rustc_hash::FxHashSet<Element> = Default::default();
        seen.insert(Element::identity());
        for r in 1..=radius {
            let mut next = Vec::new();
            for x in &spheres[r - 1] {
                for s in gens {
                    let y = group.mul(x, s);
                    if seen.insert(y.clone()) {
                        next.push(y);
                    }
                }
            }
            next.sort();
            spheres.push(next);
        }
        spheres
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn element(&self, id: usize) -> &Element {
        &self.elements[id]
    }

    pub fn id(&self, x: &Element) -> Option<usize> {
        self.index.get(x).map(|&i| i as usize)
    }

    /// Id of `x`, or a radius-exceeded error naming the radius it would need.
    pub fn require(&self, group: &Group, x: &Element) -> Result<usize> {
        self.id(x).ok_or_else(|| Error::RadiusExceeded {
            required: group.length(x) as usize,
            budget: self.radius,
        })
    }

    /// Number of elements within distance `r` (clamped to the ball radius).
    pub fn count_within(&self, r: usize) -> usize {
        self.sphere_start[r.min(self.radius) + 1]
    }

    pub fn sphere(&self, r: usize) -> &[Element] {
        if r > self.radius {
            return &[];
        }
        &self.elements[self.sphere_start[r]..self.sphere_start[r + 1]]
    }

    pub fn sphere_ids(&self, r: usize) -> std::ops::Range<usize> {
        if r > self.radius {
            return 0..0;
        }
        self.sphere_start[r]..self.sphere_start[r + 1]
    }

    pub fn radius_of(&self, id: usize) -> usize {
        self.sphere_start.partition_point(|&s| s <= id) - 1
    }

    pub fn neighbor(&self, id: usize, generator: usize) -> Option<usize> {
        self.adjacency[id][generator].map(|j| j as usize)
    }

    /// Distances from `source` to every ball element, by BFS restricted to the ball.
    ///
    /// Only exact for targets whose geodesics from `source` stay inside the ball;
    /// used as an independent check of [`Group::dist`].
    pub fn bfs_from(&self, source: usize) -> Vec<Option<u32>> {
        let mut dist = vec![None; self.len()];
        let mut queue = VecDeque::new();
        dist[source] = Some(0);
        queue.push_back(source);
        while let Some(i) = queue.pop_front() {
            let d = dist[i].unwrap();
            for j in self.adjacency[i].iter().flatten() {
                let j = *j as usize;
                if dist[j].is_none() {
                    dist[j] = Some(d + 1);
                    queue.push_back(j);
                }
            }
        }
        dist
    }
}
