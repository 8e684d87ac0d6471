//! Run records, result files, text summaries and SVG charts.

mod chart;
mod record;
mod results;
mod summary;

pub use chart::{chart_file_name, chart_metrics, render_chart, write_chart, ChartMetric};
pub use record::{sort_records, MetricsRecord, Scenario, VehicleDetail};
pub use results::{parse_results, read_results, results_csv, results_json, write_results, write_results_json, HEADER};
pub use summary::{mean_std, summarize};
