#include <CLI11.hpp>

#include <exception>
#include <iostream>

#include "atex/bootstrap.hpp"
#include "atex/moments.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Compute the 9 calibration moments of a return series; optionally the "
                 "moving-block bootstrap covariance and weight matrix"};
    std::string in_path, reference_path, out_path = "moments.csv";
    std::string cov_path, weight_path;
    std::size_t window = 2000;
    int replicates = 1000;
    std::uint64_t seed = 1;
    app.add_option("--in", in_path, "returns CSV (single 'Return' column)")->required();
    app.add_option("--reference", reference_path,
                   "reference returns for the KS statistic (defaults to --in)");
    app.add_option("--out", out_path, "moment vector CSV");
    app.add_option("--cov-out", cov_path, "write the 9x9 bootstrap covariance here");
    app.add_option("--weight-out", weight_path, "write the regularized inverse here");
    app.add_option("--window", window, "bootstrap block window");
    app.add_option("--replicates", replicates, "bootstrap replicates");
    app.add_option("--seed", seed, "bootstrap seed");
    CLI11_PARSE(app, argc, argv);

    try {
        const std::vector<double> returns = atex::read_returns_csv(in_path);
        const std::vector<double> reference =
            reference_path.empty() ? returns : atex::read_returns_csv(reference_path);
        const atex::MomentVector moments = atex::compute_moments(returns, reference);
        atex::write_moments_csv(moments, out_path);
        for (std::size_t i = 0; i < 9; ++i)
            std::cout << atex::kMomentNames[i] << "=" << moments.values[i] << '\n';
        if (!moments.garch_converged) std::cout << "# GARCH fit flagged as non-converged\n";

        if (!cov_path.empty() || !weight_path.empty()) {
            const atex::WeightMatrix wm =
                atex::bootstrap_weight_matrix(returns, window, replicates, seed);
            if (!cov_path.empty()) atex::write_matrix_csv(wm.sigma, cov_path);
            if (!weight_path.empty()) atex::write_matrix_csv(wm.weight, weight_path);
            std::cout << "condition_number=" << wm.condition_number << '\n';
            std::cout << "regularized=" << (wm.regularized ? 1 : 0) << '\n';
        }
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "moments: " << e.what() << '\n';
        return 1;
    }
}
