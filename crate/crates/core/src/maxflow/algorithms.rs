//! The four maximum-flow solvers. All operate on the shared slot
//! representation: `residual` holds remaining capacity per slot, pushing
//! on slot `e` frees capacity on `e ^ 1`.

use std::collections::VecDeque;

use super::FlowNetwork;

/// Edmonds-Karp: repeated breadth-first shortest augmenting paths by hop
/// count.
pub(super) fn edmonds_karp(net: &FlowNetwork, residual: &mut [f64]) -> f64 {
    let n = net.num_nodes();
    let eps = net.eps;
    let mut value = 0.0;
    let mut pred: Vec<Option<u32>> = vec![None; n];
    loop {
        pred.iter_mut().for_each(|p| *p = None);
        let mut queue = VecDeque::new();
        queue.push_back(net.source);
        'bfs: while let Some(u) = queue.pop_front() {
            for &slot in &net.adj[u] {
                let v = net.slots[slot as usize].to as usize;
                if v != net.source && pred[v].is_none() && residual[slot as usize] > eps {
                    pred[v] = Some(slot);
                    if v == net.sink {
                        break 'bfs;
                    }
                    queue.push_back(v);
                }
            }
        }
        let Some(mut slot) = pred[net.sink] else { break };
        let mut bottleneck = f64::INFINITY;
        loop {
            bottleneck = bottleneck.min(residual[slot as usize]);
            let u = net.slots[(slot ^ 1) as usize].to as usize;
            if u == net.source {
                break;
            }
            slot = pred[u].unwrap();
        }
        let mut slot = pred[net.sink].unwrap();
        loop {
            residual[slot as usize] -= bottleneck;
            residual[(slot ^ 1) as usize] += bottleneck;
            let u = net.slots[(slot ^ 1) as usize].to as usize;
            if u == net.source {
                break;
            }
            slot = pred[u].unwrap();
        }
        value += bottleneck;
    }
    value
}

/// Dinitz: BFS level graph plus DFS blocking flow with current-arc
/// pointers.
pub(super) fn dinitz(net: &FlowNetwork, residual: &mut [f64]) -> f64 {
    let n = net.num_nodes();
    let eps = net.eps;
    let mut value = 0.0;
    let mut level = vec![u32::MAX; n];
    let mut iter = vec![0usize; n];
    loop {
        level.iter_mut().for_each(|l| *l = u32::MAX);
        level[net.source] = 0;
        let mut queue = VecDeque::new();
        queue.push_back(net.source);
        while let Some(u) = queue.pop_front() {
            for &slot in &net.adj[u] {
                let v = net.slots[slot as usize].to as usize;
                if level[v] == u32::MAX && residual[slot as usize] > eps {
                    level[v] = level[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        if level[net.sink] == u32::MAX {
            break;
        }
        iter.iter_mut().for_each(|i| *i = 0);
        loop {
            let pushed = dfs_blocking(net, residual, &level, &mut iter, net.source, f64::INFINITY, eps);
            if pushed <= eps {
                break;
            }
            value += pushed;
        }
    }
    value
}

fn dfs_blocking(
    net: &FlowNetwork,
    residual: &mut [f64],
    level: &[u32],
    iter: &mut [usize],
    u: usize,
    limit: f64,
    eps: f64,
) -> f64 {
    if u == net.sink {
        return limit;
    }
    while iter[u] < net.adj[u].len() {
        let slot = net.adj[u][iter[u]];
        let v = net.slots[slot as usize].to as usize;
        if level[v] == level[u] + 1 && residual[slot as usize] > eps {
            let pushed = dfs_blocking(
                net,
                residual,
                level,
                iter,
                v,
                limit.min(residual[slot as usize]),
                eps,
            );
            if pushed > eps {
                residual[slot as usize] -= pushed;
                residual[(slot ^ 1) as usize] += pushed;
                return pushed;
            }
        }
        iter[u] += 1;
    }
    0.0
}

/// Shortest augmenting path with exact distance labels: advance along
/// admissible arcs, retreat by relabeling, augment on reaching the sink.
/// Terminates once the source label reaches the node count.
pub(super) fn shortest_augmenting_path(net: &FlowNetwork, residual: &mut [f64]) -> f64 {
    let n = net.num_nodes();
    let eps = net.eps;
    let mut value = 0.0;

    // exact distance labels from a backward BFS over residual arcs
    let mut dist = vec![n as u32; n];
    dist[net.sink] = 0;
    let mut queue = VecDeque::new();
    queue.push_back(net.sink);
    while let Some(v) = queue.pop_front() {
        for &slot in &net.adj[v] {
            let u = net.slots[slot as usize].to as usize;
            if dist[u] == n as u32 && residual[(slot ^ 1) as usize] > eps {
                dist[u] = dist[v] + 1;
                queue.push_back(u);
            }
        }
    }
    if dist[net.source] >= n as u32 {
        return 0.0;
    }

    let mut current = vec![0usize; n];
    let mut path: Vec<u32> = Vec::new();
    let mut u = net.source;
    while dist[net.source] < n as u32 {
        let mut advanced = false;
        while current[u] < net.adj[u].len() {
            let slot = net.adj[u][current[u]];
            let v = net.slots[slot as usize].to as usize;
            if residual[slot as usize] > eps && dist[u] == dist[v] + 1 {
                path.push(slot);
                u = v;
                advanced = true;
                break;
            }
            current[u] += 1;
        }
        if advanced {
            if u == net.sink {
                let bottleneck = path
                    .iter()
                    .map(|&s| residual[s as usize])
                    .fold(f64::INFINITY, f64::min);
                for &s in &path {
                    residual[s as usize] -= bottleneck;
                    residual[(s ^ 1) as usize] += bottleneck;
                }
                value += bottleneck;
                // restart from the source; labels stay valid
                path.clear();
                u = net.source;
            }
            continue;
        }
        // retreat: relabel u to one above its best admissible neighbor
        let mut best = n as u32;
        for &slot in &net.adj[u] {
            if residual[slot as usize] > eps {
                let v = net.slots[slot as usize].to as usize;
                best = best.min(dist[v] + 1);
            }
        }
        dist[u] = best;
        current[u] = 0;
        if u != net.source {
            let back = path.pop().unwrap();
            u = net.slots[(back ^ 1) as usize].to as usize;
        }
    }
    value
}

/// Preflow-push with highest-label selection and a global relabel every
/// |V| relabels. Runs to completion (no excess left outside source and
/// sink), so the residual array describes a valid maximum flow.
pub(super) fn preflow_push(net: &FlowNetwork, residual: &mut [f64]) -> f64 {
    let n = net.num_nodes();
    let eps = net.eps;
    let (s, t) = (net.source, net.sink);
    if s == t {
        return 0.0;
    }

    let mut height = vec![0u32; n];
    let mut excess = vec![0.0f64; n];
    let mut current = vec![0usize; n];

    // buckets of potentially-active nodes per height
    let max_height = 2 * n;
    let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); max_height + 1];
    let mut highest = 0usize;

    let global_relabel = |height: &mut Vec<u32>, current: &mut Vec<usize>, residual: &[f64]| {
        // heights = residual distance to t, else n + residual distance to s
        for h in height.iter_mut() {
            *h = max_height as u32;
        }
        let mut queue = VecDeque::new();
        height[t] = 0;
        queue.push_back(t);
        while let Some(v) = queue.pop_front() {
            for &slot in &net.adj[v] {
                let u = net.slots[slot as usize].to as usize;
                if height[u] == max_height as u32 && residual[(slot ^ 1) as usize] > eps {
                    height[u] = height[v] + 1;
                    queue.push_back(u);
                }
            }
        }
        height[s] = n as u32;
        queue.push_back(s);
        while let Some(v) = queue.pop_front() {
            for &slot in &net.adj[v] {
                let u = net.slots[slot as usize].to as usize;
                if u != t
                    && height[u] >= max_height as u32
                    && residual[(slot ^ 1) as usize] > eps
                {
                    height[u] = height[v] + 1;
                    queue.push_back(u);
                }
            }
        }
        current.iter_mut().for_each(|c| *c = 0);
    };

    global_relabel(&mut height, &mut current, residual);

    // saturate all source arcs
    let source_slots: Vec<u32> = net.adj[s].iter().copied().filter(|&e| e % 2 == 0).collect();
    for slot in source_slots {
        let delta = residual[slot as usize];
        if delta > eps {
            let v = net.slots[slot as usize].to as usize;
            residual[slot as usize] -= delta;
            residual[(slot ^ 1) as usize] += delta;
            excess[v] += delta;
            if v != t && (height[v] as usize) <= max_height {
                buckets[height[v] as usize].push(v);
                highest = highest.max(height[v] as usize);
            }
        }
    }

    let mut relabels_since_global = 0usize;
    loop {
        // find the highest active node
        while highest > 0 && buckets[highest].is_empty() {
            highest -= 1;
        }
        let Some(u) = buckets[highest].pop() else {
            if highest == 0 {
                break;
            }
            continue;
        };
        if u == s || u == t || excess[u] <= eps {
            continue;
        }
        // discharge u
        while excess[u] > eps {
            if current[u] >= net.adj[u].len() {
                // relabel
                let mut best = max_height as u32;
                for &slot in &net.adj[u] {
                    if residual[slot as usize] > eps {
                        let v = net.slots[slot as usize].to as usize;
                        best = best.min(height[v] + 1);
                    }
                }
                height[u] = best;
                current[u] = 0;
                relabels_since_global += 1;
                if height[u] as usize >= max_height {
                    // unreachable excess; cannot route further
                    break;
                }
                if relabels_since_global >= n {
                    global_relabel(&mut height, &mut current, residual);
                    relabels_since_global = 0;
                }
                continue;
            }
            let slot = net.adj[u][current[u]];
            let v = net.slots[slot as usize].to as usize;
            if residual[slot as usize] > eps && height[u] == height[v] + 1 {
                let delta = excess[u].min(residual[slot as usize]);
                residual[slot as usize] -= delta;
                residual[(slot ^ 1) as usize] += delta;
                excess[u] -= delta;
                if v != s && v != t {
                    if excess[v] <= eps {
                        buckets[height[v] as usize].push(v);
                        highest = highest.max(height[v] as usize);
                    }
                    excess[v] += delta;
                }
                if v == t {
                    excess[t] += delta;
                }
                if v == s {
                    excess[s] += delta;
                }
            } else {
                current[u] += 1;
            }
        }
        if excess[u] > eps && (height[u] as usize) < max_height {
            buckets[height[u] as usize].push(u);
            highest = highest.max(height[u] as usize);
        }
    }
    excess[t]
}
