//! Per-sector throughput from the aggregation queue recursion, and the
//! throughput of the blockage state including the post-blockage drain.

/// Relative margin under which a sector's capacity counts as not exceeding
/// the load. At `a_factor = 1` the best sector's capacity equals the load
/// analytically and only rounding separates them; a near-zero drain rate
/// would otherwise produce an astronomically long drain.
pub const DRAIN_TOLERANCE: f64 = 1e-9;

/// Stable queue level of one sector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueueLevel {
    pub level: f64,
    pub saturated: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateThroughput {
    /// Stable queue level, or `q` when saturated.
    pub q_l: f64,
    pub saturated: bool,
    pub throughput: f64,
    /// Throughput when every frame carries `a_max`.
    pub capacity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockageOutcome {
    /// Throughput of the blockage state.
    pub thp_b: f64,
    /// Mean duration of the blockage effect over the destination sectors.
    pub t_b_mean: f64,
    pub t_b_per_state: Vec<f64>,
    pub drained_new_data: Vec<f64>,
}

/// One step of the queue recursion: data arriving during the previous
/// transmission and its channel access.
pub fn queue_step(prev_level: f64, load: f64, mcs: f64, access_time: f64, overhead: f64) -> f64 {
    (prev_level / mcs + access_time) * overhead * load
}

/// Limit of [`queue_step`] iterated from an empty queue.
///
/// The recursion is affine with slope `f·l/mcs`; below 1 it converges to
/// `t_acc·f·l / (1 − f·l/mcs)`, otherwise the queue fills up.
pub fn queue_fixed_point(load: f64, mcs: f64, access_time: f64, overhead: f64, q: f64) -> QueueLevel {
    if load <= 0.0 {
        return QueueLevel {
            level: 0.0,
            saturated: false,
        };
    }
    let slope = overhead * load / mcs;
    if slope >= 1.0 {
        return QueueLevel {
            level: q,
            saturated: true,
        };
    }
    let level = access_time * overhead * load / (1.0 - slope);
    if level <= q {
        QueueLevel {
            level,
            saturated: false,
        }
    } else {
        QueueLevel {
            level: q,
            saturated: true,
        }
    }
}

/// Throughput of a sector whose frames carry `a_max`.
pub fn frame_capacity(mcs: f64, access_time: f64, overhead: f64, a_max: f64) -> f64 {
    a_max / ((a_max / mcs + access_time) * overhead)
}

pub fn state_throughput(
    load: f64,
    mcs: f64,
    access_time: f64,
    overhead: f64,
    a_max: f64,
    q: f64,
) -> StateThroughput {
    let QueueLevel { level, saturated } = queue_fixed_point(load, mcs, access_time, overhead, q);
    let capacity = frame_capacity(mcs, access_time, overhead, a_max);
    let throughput = if !saturated && level <= a_max { load } else { capacity };
    StateThroughput {
        q_l: level,
        saturated,
        throughput,
        capacity,
    }
}

/// Throughput and effect duration of the blockage state.
///
/// During the physical block of length `t` the backlog `min(t·l, q)` builds
/// up. On landing in sector `j` it drains at `capacity_j − l` while new data
/// keeps arriving; a sector that cannot outpace the load never drains and
/// contributes zero over just `t`.
pub fn blockage_effect(
    t: f64,
    load: f64,
    q: f64,
    capacities: &[f64],
    p_recover: &[f64],
) -> BlockageOutcome {
    assert_eq!(capacities.len(), p_recover.len(), "one capacity per sector");
    let backlog = (t * load).min(q);
    let mut thp_b = 0.0;
    let mut t_b_mean = 0.0;
    let mut t_b_per_state = Vec::with_capacity(capacities.len());
    let mut drained_new_data = Vec::with_capacity(capacities.len());
    for (&capacity, &p) in capacities.iter().zip(p_recover) {
        if capacity <= load * (1.0 + DRAIN_TOLERANCE) {
            t_b_per_state.push(t);
            drained_new_data.push(0.0);
            t_b_mean += p * t;
            continue;
        }
        let drain = backlog / (capacity - load);
        let new_data = load * drain;
        let t_bj = t + drain;
        thp_b += p * (backlog + new_data) / t_bj;
        t_b_mean += p * t_bj;
        t_b_per_state.push(t_bj);
        drained_new_data.push(new_data);
    }
    BlockageOutcome {
        thp_b,
        t_b_mean,
        t_b_per_state,
        drained_new_data,
    }
}
