//! Finite groups given by their multiplication tables.

use std::collections::BTreeSet;

use crate::error::{Error, Result};

/// Cayley table of a finite group. Element 0 is the identity.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FiniteGroup {
    table: Vec<Vec<usize>>,
}

impl FiniteGroup {
    pub fn new(table: Vec<Vec<usize>>) -> Result<Self> {
        let n = table.len();
        if n == 0 {
            return Err(Error::InvalidGalois("empty group table".into()));
        }
        for (a, row) in table.iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidGalois(format!(
                    "row {a} has length {}",
                    row.len()
                )));
            }
            let seen: BTreeSet<usize> = row.iter().copied().collect();
            if seen.len() != n || row.iter().any(|&x| x >= n) {
                return Err(Error::InvalidGalois(format!(
                    "row {a} is not a permutation"
                )));
            }
        }
        for x in 0..n {
            if table[0][x] != x || table[x][0] != x {
                return Err(Error::InvalidGalois("element 0 is not the identity".into()));
            }
            let col: BTreeSet<usize> = (0..n).map(|a| table[a][x]).collect();
            if col.len() != n {
                return Err(Error::InvalidGalois(format!(
                    "column {x} is not a permutation"
                )));
            }
        }
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    if table[table[a][b]][c] != table[a][table[b][c]] {
                        return Err(Error::InvalidGalois(format!(
                            "not associative at ({a}, {b}, {c})"
                        )));
                    }
                }
            }
        }
        Ok(FiniteGroup { table })
    }

    pub fn trivial() -> Self {
        FiniteGroup {
            table: vec![vec![0]],
        }
    }

    pub fn cyclic(n: usize) -> Self {
        assert!(n > 0);
        let table = (0..n)
            .map(|a| (0..n).map(|b| (a + b) % n).collect())
            .collect();
        FiniteGroup { table }
    }

    /// Direct product; element (a, b) has index a * |other| + b.
    pub fn product(&self, other: &FiniteGroup) -> Self {
        let m = other.order();
        let n = self.order() * m;
        let table = (0..n)
            .map(|x| {
                (0..n)
                    .map(|y| self.mul(x / m, y / m) * m + other.mul(x % m, y % m))
                    .collect()
            })
            .collect();
        FiniteGroup { table }
    }

    pub fn order(&self) -> usize {
        self.table.len()
    }

    pub fn table(&self) -> &[Vec<usize>] {
        &self.table
    }

    #[inline]
    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.table[a][b]
    }

    pub fn inv(&self, a: usize) -> usize {
        (0..self.order())
            .find(|&b| self.table[a][b] == 0)
            .expect("validated group table")
    }

    pub fn contains(&self, a: usize) -> bool {
        a < self.order()
    }

    pub fn element_order(&self, a: usize) -> usize {
        let mut x = a;
        let mut k = 1;
        while x != 0 {
            x = self.mul(x, a);
            k += 1;
        }
        k
    }

    pub fn is_abelian(&self) -> bool {
        let n = self.order();
        (0..n).all(|a| (0..n).all(|b| self.mul(a, b) == self.mul(b, a)))
    }

    pub fn is_subgroup(&self, elems: &[usize]) -> bool {
        let set: BTreeSet<usize> = elems.iter().copied().collect();
        set.contains(&0)
            && set.iter().all(|&a| self.contains(a))
            && set
                .iter()
                .all(|&a| set.iter().all(|&b| set.contains(&self.mul(a, b))))
    }

    /// Smallest subgroup containing `gens`.
    pub fn generated(&self, gens: &[usize]) -> Vec<usize> {
        let mut set: BTreeSet<usize> = BTreeSet::from([0]);
        let mut frontier = vec![0];
        while let Some(x) = frontier.pop() {
            for &s in gens {
                let y = self.mul(x, s);
                if set.insert(y) {
                    frontier.push(y);
                }
            }
        }
        set.into_iter().collect()
    }

    /// Greedy generating set, in increasing element order.
    pub fn generators(&self) -> Vec<usize> {
        let mut gens = Vec::new();
        let mut span = vec![0];
        for a in 1..self.order() {
            if !span.contains(&a) {
                gens.push(a);
                span = self.generated(&gens);
            }
        }
        gens
    }

    /// The subgroup on `elems` as a group in its own right, together with
    /// the map from new indices to old ones (identity first, then ascending).
    pub fn subgroup(&self, elems: &[usize]) -> Result<(FiniteGroup, Vec<usize>)> {
        if elems.iter().any(|&a| !self.contains(a)) || !self.is_subgroup(elems) {
            return Err(Error::NotASubgroup(elems.to_vec()));
        }
        let set: BTreeSet<usize> = elems.iter().copied().collect();
        let old: Vec<usize> = set.into_iter().collect();
        let index = |x: usize| old.iter().position(|&o| o == x).unwrap();
        let table = old
            .iter()
            .map(|&a| old.iter().map(|&b| index(self.mul(a, b))).collect())
            .collect();
        Ok((FiniteGroup { table }, old))
    }

    pub fn is_homomorphism(&self, target: &FiniteGroup, map: &[usize]) -> bool {
        let n = self.order();
        map.len() == n
            && map.iter().all(|&x| target.contains(x))
            && (0..n).all(|a| (0..n).all(|b| map[self.mul(a, b)] == target.mul(map[a], map[b])))
    }

    pub fn is_surjective_onto(&self, target: &FiniteGroup, map: &[usize]) -> bool {
        let img: BTreeSet<usize> = map.iter().copied().collect();
        img.len() == target.order()
    }

    /// Brute-force isomorphism test; fine for the small groups used here.
    pub fn is_isomorphic(&self, other: &FiniteGroup) -> bool {
        let n = self.order();
        if n != other.order() {
            return false;
        }
        let mut sa: Vec<usize> = (0..n).map(|a| self.element_order(a)).collect();
        let mut sb: Vec<usize> = (0..n).map(|a| other.element_order(a)).collect();
        sa.sort_unstable();
        sb.sort_unstable();
        if sa != sb {
            return false;
        }
        let gens = self.generators();
        let mut images = vec![0; gens.len()];
        self.search_iso(other, &gens, &mut images, 0)
    }

    fn search_iso(
        &self,
        other: &FiniteGroup,
        gens: &[usize],
        images: &mut [usize],
        k: usize,
    ) -> bool {
        if k == gens.len() {
            return self.extend_map(other, gens, images).is_some();
        }
        let want = self.element_order(gens[k]);
        for cand in 1..other.order() {
            if other.element_order(cand) == want {
                images[k] = cand;
                if self.search_iso(other, gens, images, k + 1) {
                    return true;
                }
            }
        }
        false
    }

    /// Extends generator images to a full map, checking it is a bijective homomorphism.
    fn extend_map(
        &self,
        other: &FiniteGroup,
        gens: &[usize],
        images: &[usize],
    ) -> Option<Vec<usize>> {
        let n = self.order();
        let mut map = vec![usize::MAX; n];
        map[0] = 0;
        let mut frontier = vec![0];
        while let Some(x) = frontier.pop() {
            for (s, &img) in gens.iter().zip(images) {
                let y = self.mul(x, *s);
                let fy = other.mul(map[x], img);
                if map[y] == usize::MAX {
                    map[y] = fy;
                    frontier.push(y);
                } else if map[y] != fy {
                    return None;
                }
            }
        }
        let distinct: BTreeSet<usize> = map.iter().copied().collect();
        (distinct.len() == n && self.is_homomorphism(other, &map)).then_some(map)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cyclic_and_products() {
        let z4 = FiniteGroup::cyclic(4);
        assert_eq!(z4.order(), 4);
        assert_eq!(z4.inv(1), 3);
        assert_eq!(z4.element_order(1), 4);
        let v4 = FiniteGroup::cyclic(2).product(&FiniteGroup::cyclic(2));
        assert!(FiniteGroup::new(v4.table().to_vec()).is_ok());
        assert!(!z4.is_isomorphic(&v4));
        assert!(v4.is_isomorphic(&v4.clone()));
        assert!(FiniteGroup::cyclic(6)
            .is_isomorphic(&FiniteGroup::cyclic(2).product(&FiniteGroup::cyclic(3))));
    }

    #[test]
    fn rejects_bad_tables() {
        assert!(FiniteGroup::new(vec![]).is_err());
        assert!(FiniteGroup::new(vec![vec![0, 1], vec![1, 1]]).is_err());
        assert!(FiniteGroup::new(vec![vec![1, 0], vec![0, 1]]).is_err());
        // a latin square with identity that is not associative
        let bad = vec![
            vec![0, 1, 2, 3, 4],
            vec![1, 0, 3, 4, 2],
            vec![2, 4, 0, 1, 3],
            vec![3, 2, 4, 0, 1],
            vec![4, 3, 1, 2, 0],
        ];
        assert!(FiniteGroup::new(bad).is_err());
    }

    #[test]
    fn subgroups() {
        let z4 = FiniteGroup::cyclic(4);
        let (h, map) = z4.subgroup(&[0, 2]).unwrap();
        assert_eq!(h.order(), 2);
        assert_eq!(map, vec![0, 2]);
        assert!(matches!(z4.subgroup(&[0, 1]), Err(Error::NotASubgroup(_))));
        assert!(z4.subgroup(&[0, 7]).is_err());
        let (full, _) = z4.subgroup(&[0, 1, 2, 3]).unwrap();
        assert_eq!(full, z4);
        assert_eq!(z4.generated(&[2]), vec![0, 2]);
        assert_eq!(z4.generators(), vec![1]);
    }

    #[test]
    fn homomorphisms() {
        let z4 = FiniteGroup::cyclic(4);
        let z2 = FiniteGroup::cyclic(2);
        assert!(z4.is_homomorphism(&z2, &[0, 1, 0, 1]));
        assert!(!z4.is_homomorphism(&z2, &[0, 1, 1, 0]));
        assert!(z4.is_surjective_onto(&z2, &[0, 1, 0, 1]));
        assert!(!z4.is_surjective_onto(&z2, &[0, 0, 0, 0]));
    }
}
