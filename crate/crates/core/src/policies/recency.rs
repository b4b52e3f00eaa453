const NIL: u32 = u32::MAX;

/// Intrusive doubly-linked recency list over a fixed universe of unit ids.
///
/// The front holds the most recently used unit, the back the least.
#[derive(Debug, Clone)]
pub struct RecencyList {
    prev: Vec<u32>,
    next: Vec<u32>,
    linked: Vec<bool>,
    head: u32,
    tail: u32,
    len: usize,
}

impl RecencyList {
    pub fn new(universe: usize) -> Self {
        assert!(universe < NIL as usize, "universe too large");
        Self {
            prev: vec![NIL; universe],
            next: vec![NIL; universe],
            linked: vec![false; universe],
            head: NIL,
            tail: NIL,
            len: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn contains(&self, id: usize) -> bool {
        self.linked[id]
    }

    pub fn back(&self) -> Option<usize> {
        (self.tail != NIL).then_some(self.tail as usize)
    }

    pub fn front(&self) -> Option<usize> {
        (self.head != NIL).then_some(self.head as usize)
    }

    /// Neighbour of `id` on the more-recent side.
    #[inline]
    pub fn newer(&self, id: usize) -> Option<usize> {
        let p = self.prev[id];
        (p != NIL).then_some(p as usize)
    }

    pub fn remove(&mut self, id: usize) {
        if !self.linked[id] {
            return;
        }
        let (p, n) = (self.prev[id], self.next[id]);
        if p != NIL {
            self.next[p as usize] = n;
        } else {
            self.head = n;
        }
        if n != NIL {
            self.prev[n as usize] = p;
        } else {
            self.tail = p;
        }
        self.prev[id] = NIL;
        self.next[id] = NIL;
        self.linked[id] = false;
        self.len -= 1;
    }

    /// Inserts `id` at the front, unlinking it first if present.
    pub fn touch(&mut self, id: usize) {
        if self.head == id as u32 {
            return;
        }
        self.remove(id);
        let id32 = id as u32;
        self.next[id] = self.head;
        if self.head != NIL {
            self.prev[self.head as usize] = id32;
        } else {
            self.tail = id32;
        }
        self.head = id32;
        self.linked[id] = true;
        self.len += 1;
    }

    /// Ids from most to least recent.
    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        let mut cur = self.head;
        std::iter::from_fn(move || {
            if cur == NIL {
                None
            } else {
                let id = cur as usize;
                cur = self.next[id];
                Some(id)
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordering() {
        let mut l = RecencyList::new(5);
        l.touch(1);
        l.touch(2);
        l.touch(3);
        assert_eq!(l.iter().collect::<Vec<_>>(), vec![3, 2, 1]);
        l.touch(1);
        assert_eq!(l.iter().collect::<Vec<_>>(), vec![1, 3, 2]);
        assert_eq!(l.back(), Some(2));
        assert_eq!(l.newer(2), Some(3));
        l.remove(3);
        assert_eq!(l.iter().collect::<Vec<_>>(), vec![1, 2]);
        l.remove(1);
        l.remove(2);
        assert!(l.is_empty());
        assert_eq!(l.back(), None);
        l.touch(4);
        assert_eq!(l.front(), Some(4));
        assert_eq!(l.len(), 1);
    }
}
