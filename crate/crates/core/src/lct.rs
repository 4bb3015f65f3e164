//! Array-backed link-cut tree (splay-based, with evert) maintaining a path
//! maximum over node values.

#[derive(Debug, Clone)]
struct LctNode {
    ch: [usize; 2],
    parent: usize,
    rev: bool,
    value: f64,
    /// Node holding the largest value in this splay subtree.
    best: usize,
}

/// Index value used as "no node".
pub(crate) const NIL: usize = usize::MAX;

#[derive(Debug, Clone, Default)]
pub(crate) struct LinkCut {
    nodes: Vec<LctNode>,
    free: Vec<usize>,
}

impl LinkCut {
    pub fn alloc(&mut self, value: f64) -> usize {
        let node = LctNode { ch: [NIL, NIL], parent: NIL, rev: false, value, best: NIL };
        let id = match self.free.pop() {
            Some(id) => {
                self.nodes[id] = node;
                id
            }
            None => {
                self.nodes.push(node);
                self.nodes.len() - 1
            }
        };
        self.nodes[id].best = id;
        id
    }

    /// Releases an isolated node.
    pub fn release(&mut self, x: usize) {
        debug_assert!(self.nodes[x].ch == [NIL, NIL] && self.nodes[x].parent == NIL);
        self.free.push(x);
    }

    pub fn value(&self, x: usize) -> f64 {
        self.nodes[x].value
    }

    fn better(&self, a: usize, b: usize) -> usize {
        if b == NIL {
            return a;
        }
        if a == NIL {
            return b;
        }
        let (va, vb) = (self.nodes[a].value, self.nodes[b].value);
        match va.total_cmp(&vb) {
            std::cmp::Ordering::Less => b,
            std::cmp::Ordering::Greater => a,
            std::cmp::Ordering::Equal => a.min(b),
        }
    }

    fn pull(&mut self, x: usize) {
        let [l, r] = self.nodes[x].ch;
        let mut best = x;
        if l != NIL {
            best = self.better(best, self.nodes[l].best);
        }
        if r != NIL {
            best = self.better(best, self.nodes[r].best);
        }
        self.nodes[x].best = best;
    }

    fn is_root(&self, x: usize) -> bool {
        let p = self.nodes[x].parent;
        p == NIL || (self.nodes[p].ch[0] != x && self.nodes[p].ch[1] != x)
    }

    fn push(&mut self, x: usize) {
        if self.nodes[x].rev {
            self.nodes[x].rev = false;
            self.nodes[x].ch.swap(0, 1);
            for c in self.nodes[x].ch {
                if c != NIL {
                    self.nodes[c].rev ^= true;
                }
            }
        }
    }

    fn rotate(&mut self, x: usize) {
        let p = self.nodes[x].parent;
        let g = self.nodes[p].parent;
        let dir = usize::from(self.nodes[p].ch[1] == x);
        let b = self.nodes[x].ch[dir ^ 1];
        if !self.is_root(p) {
            let pd = usize::from(self.nodes[g].ch[1] == p);
            self.nodes[g].ch[pd] = x;
        }
        self.nodes[x].parent = g;
        self.nodes[x].ch[dir ^ 1] = p;
        self.nodes[p].parent = x;
        self.nodes[p].ch[dir] = b;
        if b != NIL {
            self.nodes[b].parent = p;
        }
        self.pull(p);
        self.pull(x);
    }

    fn splay(&mut self, x: usize) {
        let mut path = vec![x];
        let mut y = x;
        while !self.is_root(y) {
            y = self.nodes[y].parent;
            path.push(y);
        }
        for &n in path.iter().rev() {
            self.push(n);
        }
        while !self.is_root(x) {
            let p = self.nodes[x].parent;
            if !self.is_root(p) {
                let g = self.nodes[p].parent;
                let zigzig = (self.nodes[g].ch[0] == p) == (self.nodes[p].ch[0] == x);
                self.rotate(if zigzig { p } else { x });
            }
            self.rotate(x);
        }
    }

    fn access(&mut self, x: usize) {
        let mut last = NIL;
        let mut y = x;
        while y != NIL {
            self.splay(y);
            self.nodes[y].ch[1] = last;
            self.pull(y);
            last = y;
            y = self.nodes[y].parent;
        }
        self.splay(x);
    }

    fn make_root(&mut self, x: usize) {
        self.access(x);
        self.nodes[x].rev ^= true;
        self.push(x);
    }

    pub fn find_root(&mut self, x: usize) -> usize {
        self.access(x);
        let mut y = x;
        loop {
            self.push(y);
            let l = self.nodes[y].ch[0];
            if l == NIL {
                break;
            }
            y = l;
        }
        self.splay(y);
        y
    }

    pub fn connected(&mut self, a: usize, b: usize) -> bool {
        a == b || self.find_root(a) == self.find_root(b)
    }

    /// Links two nodes in different trees.
    pub fn link(&mut self, a: usize, b: usize) {
        self.make_root(a);
        self.nodes[a].parent = b;
    }

    /// Cuts the tree edge between adjacent nodes `a` and `b`.
    pub fn cut(&mut self, a: usize, b: usize) {
        self.make_root(a);
        self.access(b);
        // b's left child is now exactly a
        debug_assert_eq!(self.nodes[b].ch[0], a);
        self.nodes[b].ch[0] = NIL;
        self.nodes[a].parent = NIL;
        self.pull(b);
    }

    /// Node with the largest value on the tree path between `a` and `b`.
    pub fn path_max(&mut self, a: usize, b: usize) -> usize {
        self.make_root(a);
        self.access(b);
        self.nodes[b].best
    }

    pub fn set_value(&mut self, x: usize, value: f64) {
        self.access(x);
        self.nodes[x].value = value;
        self.pull(x);
    }
}
