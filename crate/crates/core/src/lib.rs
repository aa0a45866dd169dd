/*!
Edge-weighted online bipartite matching with free disposal, built around
online correlated selection (OCS).

The library has three layers:

* Selection: [`ocs`] implements the independent-bit baseline and two
  negatively correlated selectors behind one [`ocs::Selector`] interface,
  with [`recurrences`] evaluating the quality parameters they guarantee.
* Matching engines: [`primal_dual`] runs the edge-weighted engine with
  CCDF-style dual bookkeeping and a per-round invariant checker;
  [`unweighted`] runs the two-choice greedy for unit weights.
* Verification: [`lp`] builds and solves the factor-revealing linear
  programs that certify the competitive ratios and re-checks the built-in
  gain-sharing tables; [`oracle`] provides exact ground truth (offline
  optimum, exhaustive selection enumeration, exact expected value) on
  desk-scale inputs; [`workbench`] generates instances, drives seeded
  experiments, and backs the `ocsmatch` CLI.
*/

pub mod lp;
pub mod ocs;
pub mod oracle;
pub mod primal_dual;
pub mod recurrences;
pub mod unweighted;
pub mod workbench;
