//! Progressive edge growth for regular Tanner graphs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Variable-node adjacency of a `(var_degree, check_degree)`-regular graph
/// with `n` variables, or `None` if the greedy construction painted itself
/// into a corner.
///
/// Each new edge of a variable goes to a check outside its current
/// neighbourhood when one exists, otherwise to one of the most distant
/// checks; ties are broken by lowest check degree, then at random.
pub fn regular_peg(n: usize, var_degree: usize, check_degree: usize, seed: u64) -> Option<Vec<Vec<usize>>> {
    assert!((n * var_degree).is_multiple_of(check_degree));
    let m = n * var_degree / check_degree;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut var_adj: Vec<Vec<usize>> = vec![Vec::with_capacity(var_degree); n];
    let mut check_adj: Vec<Vec<usize>> = vec![Vec::with_capacity(check_degree); m];

    // Stamps avoid clearing visit arrays for every BFS.
    let mut check_seen = vec![0u32; m];
    let mut var_seen = vec![0u32; n];
    let mut stamp = 0u32;

    let mut frontier: Vec<usize> = Vec::new();
    let mut next: Vec<usize> = Vec::new();
    let mut pool: Vec<usize> = Vec::new();

    for v in 0..n {
        for e in 0..var_degree {
            let open = |c: usize, adj: &Vec<Vec<usize>>, cadj: &Vec<Vec<usize>>| {
                cadj[c].len() < check_degree && !adj[v].contains(&c)
            };
            pool.clear();
            if e == 0 {
                pool.extend((0..m).filter(|&c| open(c, &var_adj, &check_adj)));
            } else {
                stamp += 1;
                var_seen[v] = stamp;
                frontier.clear();
                for &c in &var_adj[v] {
                    check_seen[c] = stamp;
                    frontier.push(c);
                }
                loop {
                    next.clear();
                    for &c in &frontier {
                        for &w in &check_adj[c] {
                            if var_seen[w] == stamp {
                                continue;
                            }
                            var_seen[w] = stamp;
                            for &c2 in &var_adj[w] {
                                if check_seen[c2] != stamp {
                                    check_seen[c2] = stamp;
                                    next.push(c2);
                                }
                            }
                        }
                    }
                    let unreached_open = (0..m)
                        .filter(|&c| check_seen[c] != stamp && open(c, &var_adj, &check_adj))
                        .count();
                    if next.is_empty() {
                        // Neighbourhood stopped growing: anything unreached is fine.
                        pool.extend((0..m).filter(|&c| check_seen[c] != stamp && open(c, &var_adj, &check_adj)));
                        break;
                    }
                    if unreached_open == 0 {
                        // Everything open is reachable; take the farthest layer.
                        pool.extend(next.iter().copied().filter(|&c| open(c, &var_adj, &check_adj)));
                        if pool.is_empty() {
                            pool.extend((0..m).filter(|&c| open(c, &var_adj, &check_adj)));
                        }
                        break;
                    }
                    std::mem::swap(&mut frontier, &mut next);
                }
            }
            if pool.is_empty() {
                return None;
            }
            let min_deg = pool.iter().map(|&c| check_adj[c].len()).min()?;
            pool.retain(|&c| check_adj[c].len() == min_deg);
            let c = pool[rng.random_range(0..pool.len())];
            var_adj[v].push(c);
            check_adj[c].push(v);
        }
    }
    Some(var_adj)
}

/// True if two checks share two or more variables.
pub fn has_four_cycle(var_adj: &[Vec<usize>], num_checks: usize) -> bool {
    let mut seen = std::collections::HashSet::new();
    for checks in var_adj {
        for a in 0..checks.len() {
            for b in (a + 1)..checks.len() {
                let (x, y) = (checks[a].min(checks[b]), checks[a].max(checks[b]));
                if !seen.insert(x * num_checks + y) {
                    return true;
                }
            }
        }
    }
    false
}
