#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "palpation/geometry.hpp"

namespace palpation {

using Face = std::array<std::uint32_t, 3>;

/// Triangle mesh with per-face outward normals. Normals are always derived from
/// the vertex winding (counter-clockwise seen from outside); nothing read from
/// a file is trusted.
class TriMesh {
public:
    TriMesh() = default;

    /// Throws InvalidInput on out-of-range indices, repeated vertices within a
    /// face, non-finite coordinates or zero-area faces.
    TriMesh(std::vector<Vec3> vertices, std::vector<Face> faces);

    const std::vector<Vec3>& vertices() const { return vertices_; }
    const std::vector<Face>& faces() const { return faces_; }
    const std::vector<Vec3>& face_normals() const { return normals_; }

    std::size_t face_count() const { return faces_.size(); }
    bool empty() const { return faces_.empty(); }

    Vec3 corner(std::size_t face, int k) const { return vertices_[faces_[face][k]]; }

private:
    std::vector<Vec3> vertices_;
    std::vector<Face> faces_;
    std::vector<Vec3> normals_;
};

struct ClosestPointResult {
    Vec3 point = Vec3::Zero();
    Vec3 normal = Vec3::UnitZ();
    std::size_t face_index = 0;
    double distance = 0.0;
};

/// Closest point of the closed triangle (a, b, c) to q.
Vec3 closest_point_on_triangle(const Vec3& q, const Vec3& a, const Vec3& b, const Vec3& c);

/// Exhaustive scan over every face. Ties go to the lowest face index.
/// Throws InvalidInput on an empty mesh.
ClosestPointResult closest_point(const TriMesh& mesh, const Vec3& query);

struct RayHit {
    Vec3 point = Vec3::Zero();
    Vec3 normal = Vec3::UnitZ();
    std::size_t face_index = 0;
    double t = 0.0;
};

/// First intersection of origin + t * direction (t > 0) with the mesh, or
/// nullopt when the ray misses.
std::optional<RayHit> raycast(const TriMesh& mesh, const Vec3& origin, const Vec3& direction);

/// Bounding-volume hierarchy over a mesh for repeated closest-point queries.
/// Answers are identical to the exhaustive closest_point, including tie
/// breaking. Holds a reference: the mesh must outlive the index.
class MeshIndex {
public:
    explicit MeshIndex(const TriMesh& mesh);

    const TriMesh& mesh() const { return *mesh_; }
    ClosestPointResult closest_point(const Vec3& query) const;

private:
    struct Node {
        Eigen::AlignedBox3d box;
        std::uint32_t begin = 0;  // range into order_ for leaves
        std::uint32_t count = 0;  // 0 for interior nodes
        std::uint32_t left = 0;
        std::uint32_t right = 0;
    };

    std::uint32_t build(std::uint32_t begin, std::uint32_t end);

    const TriMesh* mesh_;
    std::vector<std::uint32_t> order_;
    std::vector<Eigen::AlignedBox3d> face_boxes_;
    std::vector<Node> nodes_;
};

struct MeshStats {
    std::size_t vertex_count = 0;
    std::size_t face_count = 0;
    std::size_t boundary_edges = 0;
    std::size_t non_manifold_edges = 0;
    double surface_area = 0.0;
    Vec3 bbox_min = Vec3::Zero();
    Vec3 bbox_max = Vec3::Zero();
};

MeshStats mesh_stats(const TriMesh& mesh);

/// ASCII OBJ: `v x y z` and `f i j k` records with 1-based indices (negative
/// relative indices and `i/t/n` forms accepted). Faces with more than three
/// vertices are rejected.
TriMesh load_obj(const std::filesystem::path& path);
void save_obj(const TriMesh& mesh, const std::filesystem::path& path);

/// JSON mesh: {"vertices": [[x,y,z], ...], "faces": [[i,j,k], ...]}, 0-based.
TriMesh load_mesh_json(const std::filesystem::path& path);
void save_mesh_json(const TriMesh& mesh, const std::filesystem::path& path);

/// Dispatches on extension: .obj or .json.
TriMesh load_mesh(const std::filesystem::path& path);

}  // namespace palpation
