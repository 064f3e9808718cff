#include "ddpc/estimation.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "ddpc/errors.hpp"

namespace ddpc::estimation {

namespace {

// Populates sigma_delta, its range factors, sigma_phi, and the phi range
// basis. The rank cut for sigma_delta uses, besides the relative threshold,
// an absolute floor tied to the scale of Y: an exact fit leaves a residual
// that is pure rounding noise, and a ratio test alone would promote that
// noise to full rank.
void finalize_model(const sysdata::RegressorBundle& bundle, PredictorModel& model) {
    const Index N = bundle.dims.n_cols;
    const Matrix residual = bundle.Y - model.theta * bundle.Phi;
    model.sigma_delta = (residual * residual.transpose()) / static_cast<double>(N);
    model.sigma_delta = numkit::symmetrized(model.sigma_delta);
    model.sigma_phi = (bundle.Phi * bundle.Phi.transpose()) / static_cast<double>(N);
    model.sigma_phi = numkit::symmetrized(model.sigma_phi);

    Eigen::SelfAdjointEigenSolver<Matrix> eig(model.sigma_delta);
    const Vector evals = eig.eigenvalues();  // ascending
    const double data_scale = bundle.Y.norm();
    const double dim_factor =
        static_cast<double>(std::max(bundle.Y.rows(), bundle.Y.cols()));
    const double floor =
        std::pow(1e-9 * dim_factor * data_scale, 2) / static_cast<double>(N);
    const double rel = numkit::default_rank_tol(model.sigma_delta.rows(),
                                                model.sigma_delta.cols()) *
                       std::max(evals.maxCoeff(), 0.0);
    const double cutoff = std::max(rel, floor);

    Index r = 0;
    for (Index i = 0; i < evals.size(); ++i) {
        if (evals(i) > cutoff) ++r;
    }
    model.delta_range_basis = Matrix(model.sigma_delta.rows(), r);
    model.delta_weights = Vector(r);
    for (Index i = 0; i < r; ++i) {
        // Descending order.
        const Index src = evals.size() - 1 - i;
        model.delta_range_basis.col(i) = eig.eigenvectors().col(src);
        model.delta_weights(i) = evals(src);
    }

    const numkit::SvdFactors phi_svd = numkit::svd(bundle.Phi);
    model.phi_range_basis = phi_svd.left_vectors.leftCols(phi_svd.numerical_rank);
    model.N = N;
    model.dims = bundle.dims;
}

} // namespace

Vector PredictorModel::predict(const Vector& z, const Vector& u) const {
    if (z.size() != dims.n_z() || u.size() != dims.horizon * dims.n_u) {
        throw InvalidInputError("predict: regressor size mismatch");
    }
    return theta * sysdata::build_regressor(z, u);
}

PredictorModel fit_least_squares(const sysdata::RegressorBundle& bundle) {
    PredictorModel model;
    model.theta = bundle.Y * numkit::pinv(bundle.Phi);
    model.causal = false;
    finalize_model(bundle, model);
    return model;
}

PredictorModel fit_causal(const sysdata::RegressorBundle& bundle) {
    const sysdata::Dimensions& dims = bundle.dims;
    const Index n_z = dims.n_z();
    const Index nu = dims.n_u;
    const Index ny = dims.n_y;

    PredictorModel model;
    model.theta = Matrix::Zero(dims.horizon * ny, dims.n_phi());
    for (Index k = 0; k < dims.horizon; ++k) {
        const Index n_cols_k = n_z + (k + 1) * nu;  // admissible regressor rows
        const Matrix phi_k = bundle.Phi.topRows(n_cols_k);
        const Matrix y_k = bundle.Y.middleRows(k * ny, ny);
        model.theta.block(k * ny, 0, ny, n_cols_k) = y_k * numkit::pinv(phi_k);
    }
    model.causal = true;
    finalize_model(bundle, model);
    return model;
}

Assumption1Result check_assumption1(const PredictorModel& model) {
    Assumption1Result out;
    out.rank_delta = model.rank_delta();
    out.rank_phi = model.rank_phi();
    out.holds = (out.rank_delta == model.sigma_delta.rows()) &&
                (out.rank_phi == model.sigma_phi.rows());
    return out;
}

std::string export_model_json(const PredictorModel& model) {
    auto row_major = [](const Matrix& m) {
        std::vector<double> flat;
        flat.reserve(static_cast<std::size_t>(m.size()));
        for (Index i = 0; i < m.rows(); ++i) {
            for (Index j = 0; j < m.cols(); ++j) flat.push_back(m(i, j));
        }
        return nlohmann::json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", flat}};
    };
    nlohmann::json j;
    j["dims"] = {{"rho", model.dims.rho},
                 {"horizon", model.dims.horizon},
                 {"n_u", model.dims.n_u},
                 {"n_y", model.dims.n_y},
                 {"n_cols", model.dims.n_cols}};
    j["N"] = model.N;
    j["causal"] = model.causal;
    j["theta"] = row_major(model.theta);
    j["sigma_delta"] = row_major(model.sigma_delta);
    j["sigma_phi"] = row_major(model.sigma_phi);
    j["rank_delta"] = model.rank_delta();
    j["rank_phi"] = model.rank_phi();
    return j.dump();
}

} // namespace ddpc::estimation
