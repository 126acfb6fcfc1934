#pragma once

#include <stdexcept>
#include <string>

namespace icudp {

// Error categories map onto CLI exit codes: config=2, data=3, numeric=4.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct EmptyStreamError : DataError {
    explicit EmptyStreamError(const std::string& stay_id)
        : DataError("empty event stream for stay '" + stay_id + "'") {}
};

struct SchemaMismatchError : DataError {
    explicit SchemaMismatchError(const std::string& feature)
        : DataError("feature '" + feature + "' not present in schema") {}
};

struct TooFewPointsError : DataError {
    TooFewPointsError(int k, long n)
        : DataError("k=" + std::to_string(k) + " exceeds number of points n=" +
                    std::to_string(n)) {}
};

struct EmptyTestError : DataError {
    EmptyTestError() : DataError("test set contains no transitions") {}
};

struct ReplayExhaustedError : DataError {
    explicit ReplayExhaustedError(const std::string& stay_id)
        : DataError("replay past end of recorded trajectory '" + stay_id + "'") {}
};

struct TooLargeError : DataError {
    explicit TooLargeError(int h)
        : DataError("policy enumeration limited to H<=12, got H=" +
                    std::to_string(h)) {}
};

}  // namespace icudp
