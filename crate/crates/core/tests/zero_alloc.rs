//! Heap allocations inside `Filter::step` after warm-up, counted by a global
//! allocator that only tallies the thread that switched counting on.

use std::alloc::{GlobalAlloc, Layout, System};
use std::cell::Cell;
use std::sync::atomic::{AtomicU64, Ordering};

use apinfer::adf::{ApproxFamily, MomentScheme};
use apinfer::filter::{Algorithm, Filter, FilterConfig};
use apinfer::model::{simulate, DynamicModel, ObsVector, ParamVector, RngStream};
use apinfer::models::{LinearGaussianModel, SinModel, SlamModel};

struct Counting;

static ALLOCS: AtomicU64 = AtomicU64::new(0);

thread_local! {
    static COUNTING: Cell<bool> = const { Cell::new(false) };
}

fn note() {
    if COUNTING.try_with(Cell::get).unwrap_or(false) {
        ALLOCS.fetch_add(1, Ordering::Relaxed);
    }
}

unsafe impl GlobalAlloc for Counting {
    unsafe fn alloc(&self, layout: Layout) -> *mut u8 {
        note();
        System.alloc(layout)
    }
    unsafe fn alloc_zeroed(&self, layout: Layout) -> *mut u8 {
        note();
        System.alloc_zeroed(layout)
    }
    unsafe fn realloc(&self, ptr: *mut u8, layout: Layout, new_size: usize) -> *mut u8 {
        note();
        System.realloc(ptr, layout, new_size)
    }
    unsafe fn dealloc(&self, ptr: *mut u8, layout: Layout) {
        System.dealloc(ptr, layout)
    }
}

#[global_allocator]
static GLOBAL: Counting = Counting;

fn counted<R>(f: impl FnOnce() -> R) -> (R, u64) {
    COUNTING.with(|c| c.set(true));
    let before = ALLOCS.load(Ordering::Relaxed);
    let r = f();
    let after = ALLOCS.load(Ordering::Relaxed);
    COUNTING.with(|c| c.set(false));
    (r, after - before)
}

/// Steps a filter over `obs` and returns heap allocations per step from the
/// third step on.
fn allocations_per_step<M: DynamicModel>(model: &M, obs: &[ObsVector], algorithm: Algorithm, cfg: FilterConfig) -> Vec<u64> {
    let mut f = Filter::new(model, algorithm, cfg).unwrap();
    f.initialize(&obs[0]).unwrap();
    f.step(&obs[1]).unwrap();
    obs[2..]
        .iter()
        .map(|y| {
            let (stats, n) = counted(|| f.step(y).unwrap());
            assert_eq!(stats.payload_reallocs, 0);
            n
        })
        .collect()
}

fn data<M: DynamicModel>(model: &M, truth: ParamVector, steps: usize) -> Vec<ObsVector> {
    simulate(model, &truth, steps, &mut RngStream::new(11, 99)).unwrap().observations
}

#[test]
fn api_gaussian_steps_do_not_allocate() {
    let m = SinModel::plain();
    let obs = data(&m, ParamVector::continuous(vec![-0.5]), 40);
    for scheme in [
        MomentScheme::GaussHermite { points: 7 },
        MomentScheme::MonteCarlo { samples: 20 },
        MomentScheme::Unscented,
    ] {
        let cfg = FilterConfig::new(200, 1).with_scheme(scheme);
        let counts = allocations_per_step(&m, &obs, Algorithm::Api, cfg);
        assert!(counts.iter().all(|&c| c == 0), "{scheme:?}: {counts:?}");
    }
}

#[test]
fn api_mixture_steps_do_not_allocate() {
    let m = SinModel::bimodal();
    let obs = data(&m, ParamVector::continuous(vec![0.7]), 30);
    let cfg = FilterConfig::new(100, 2).with_family(ApproxFamily::Mixture { components: 5 });
    let counts = allocations_per_step(&m, &obs, Algorithm::Api, cfg);
    assert!(counts.iter().all(|&c| c == 0), "{counts:?}");
}

#[test]
fn api_discrete_steps_do_not_allocate() {
    let m = SlamModel::small();
    let obs = data(&m, m.default_map(), m.steps());
    for samples in [50, 300] {
        let cfg = FilterConfig::new(300, 3).with_scheme(MomentScheme::MonteCarlo { samples });
        let counts = allocations_per_step(&m, &obs, Algorithm::Api, cfg);
        assert!(counts.iter().all(|&c| c == 0), "M={samples}: {counts:?}");
    }
}

#[test]
fn baseline_steps_do_not_allocate() {
    let m = SinModel::plain();
    let obs = data(&m, ParamVector::continuous(vec![-0.5]), 40);
    for alg in [Algorithm::Pf, Algorithm::LiuWest] {
        let counts = allocations_per_step(&m, &obs, alg, FilterConfig::new(500, 4));
        assert!(counts.iter().all(|&c| c == 0), "{alg:?}: {counts:?}");
    }
    let lg = LinearGaussianModel::state_only(0.8, 1.0, 0.5);
    let obs = data(&lg, ParamVector::continuous(vec![]), 20);
    let counts = allocations_per_step(&lg, &obs, Algorithm::Pf, FilterConfig::new(100, 5));
    assert!(counts.iter().all(|&c| c == 0), "{counts:?}");
}

#[test]
fn the_counter_sees_allocations() {
    let (_, n) = counted(|| vec![1u8; 64]);
    assert_eq!(n, 1);
}
