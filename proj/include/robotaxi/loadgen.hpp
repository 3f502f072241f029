#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace robotaxi::loadgen {

enum class LoadKind { Registration, Booking };

std::string_view to_string(LoadKind k) noexcept;
/// Throws std::invalid_argument for anything but "registration"/"booking".
LoadKind load_kind_from_string(std::string_view s);

struct LoadProfile {
  LoadKind kind = LoadKind::Registration;
  std::size_t n_requests = 1;
  /// Requests in flight at once; requests are fired in waves of this size.
  std::size_t concurrency = 1;
  std::string server_url;
  std::chrono::milliseconds request_timeout{10'000};
  /// Cap on simultaneous TCP/WebSocket handshakes while connecting clients.
  std::size_t max_pending_connects = 256;
  std::uint64_t seed = 1;
};

/// Throws std::invalid_argument (n_requests == 0, concurrency == 0,
/// concurrency > n_requests, empty url).
void validate(const LoadProfile& profile);

class EmptyReport : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LatencyReport {
  LoadKind kind = LoadKind::Registration;
  std::size_t n_requests = 0;
  std::size_t concurrency = 0;
  /// Accepted requests only, in completion order.
  std::vector<double> samples_ms;
  double mean_ms = 0.0;
  double median_ms = 0.0;
  double p95_ms = 0.0;
  double p99_ms = 0.0;
  std::size_t rejected_count = 0;
  std::size_t timeout_count = 0;

  /// samples + rejected + timeouts == n_requests.
  bool conserved() const { return samples_ms.size() + rejected_count + timeout_count == n_requests; }
};

/// Nearest-rank percentile (p in (0, 100]) of an ascending-sorted sample.
double nearest_rank(const std::vector<double>& sorted, double p);

/// Fills mean/median/p95/p99 from samples_ms (zeros when empty).
void summarize(LatencyReport& report);

/// n_requests drivers, one connection each, register with Available=true.
/// Latency: DriverLocation send -> {"Ack":"Driver"} receive (server --ack).
/// Throws net::ConnectFailure.
LatencyReport run_registration(const LoadProfile& profile);

/// fleet_size auto-accepting drivers register first; then n_requests
/// customers each send CustomerLocation + RideRequest.
/// Latency: RideRequest send -> accepted BookingReply receive.
LatencyReport run_booking(const LoadProfile& profile, std::size_t fleet_size);

inline constexpr std::string_view kCsvHeader = "kind,n_requests,concurrency,mean_ms,median_ms,p95_ms,p99_ms,rejected";

/// Appends one summary row to `csv_path` (header written when the file is new
/// or empty) and writes the samples to `<csv_path stem>.samples.csv`
/// ("kind,n_requests,index,latency_ms"). Throws EmptyReport when there are no samples.
void emit_report(const LatencyReport& report, const std::string& csv_path);

/// One parsed summary row.
struct ReportRow {
  LoadKind kind = LoadKind::Registration;
  std::size_t n_requests = 0;
  std::size_t concurrency = 0;
  double mean_ms = 0.0;
  double median_ms = 0.0;
  double p95_ms = 0.0;
  double p99_ms = 0.0;
  std::size_t rejected = 0;
};

/// Reads every row of a summary CSV. Throws std::runtime_error on bad input.
std::vector<ReportRow> read_report_csv(std::istream& in);

}  // namespace robotaxi::loadgen
